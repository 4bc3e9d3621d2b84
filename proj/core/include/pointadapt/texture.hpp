#pragma once

namespace pointadapt {

// Texture vocabulary shared by the scene generator and the source encoder.
//
// A word is a balanced sign pattern over the 8 two-pixel blocks of a 4x4
// tile. The 14 words below form a maximal constant-weight code with pairwise
// Hamming distance 4, so distinct words are orthogonal as tile patterns. The
// generator assigns words to instances without replacement, and the source
// encoder carries one matched filter per word; together these play the role
// of a pretrained encoder that already knows the domain's object textures.
inline constexpr int kNumTextureWords = 14;
inline constexpr int kTextureBlocks = 8;
inline constexpr int kTextureTile = 4;

inline constexpr signed char kTextureWords[kNumTextureWords][kTextureBlocks] = {
    {+1, +1, +1, +1, -1, -1, -1, -1}, {+1, +1, -1, -1, +1, +1, -1, -1},
    {+1, +1, -1, -1, -1, -1, +1, +1}, {+1, -1, +1, -1, +1, -1, +1, -1},
    {+1, -1, +1, -1, -1, +1, -1, +1}, {+1, -1, -1, +1, +1, -1, -1, +1},
    {+1, -1, -1, +1, -1, +1, +1, -1}, {-1, +1, +1, -1, +1, -1, -1, +1},
    {-1, +1, +1, -1, -1, +1, +1, -1}, {-1, +1, -1, +1, +1, -1, +1, -1},
    {-1, +1, -1, +1, -1, +1, -1, +1}, {-1, -1, +1, +1, +1, +1, -1, -1},
    {-1, -1, +1, +1, -1, -1, +1, +1}, {-1, -1, -1, -1, +1, +1, +1, +1},
};

// Sign of a word at pixel (y, x). Tiles repeat with period 4 in both axes,
// so cell-aligned strides see the same pattern in every cell.
constexpr int texture_sign(int word, int y, int x) {
    const int ty = ((y % kTextureTile) + kTextureTile) % kTextureTile;
    const int tx = ((x % kTextureTile) + kTextureTile) % kTextureTile;
    return kTextureWords[word][ty * 2 + tx / 2];
}

}  // namespace pointadapt
