#pragma once

#include <cstdint>
#include <ostream>

namespace pointadapt {

struct GradcheckReport {
    int configs = 0;
    long checks = 0;
    long failures = 0;
    double worst_rel_err = 0.0;

    bool ok() const { return failures == 0 && configs > 0; }
};

// Central-difference verification of every hand-derived gradient: the three
// mask losses against their logit gradients, the matching loss against its
// predicted-prototype gradients, and the full encoder/decoder backward over
// every trainable coordinate. Configurations are seeded and regenerated when
// they land too close to a ReLU kink or an assignment tie, where finite
// differences are meaningless. Relative error uses
// |fd - an| / max(|fd|, |an|, 1e-3).
GradcheckReport run_gradcheck(int n_configs, double step, double tolerance,
                              std::ostream& log);

}  // namespace pointadapt
