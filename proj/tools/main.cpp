#include "pointadapt/cli.hpp"

int main(int argc, char** argv) { return pointadapt::cli_dispatch(argc, argv); }
