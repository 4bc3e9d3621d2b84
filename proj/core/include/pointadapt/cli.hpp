#pragma once

namespace pointadapt {

// Entry point behind the pointadapt binary. Returns 0 on success, 1 on a
// usage error, 2 on a data error.
int cli_dispatch(int argc, char** argv);

}  // namespace pointadapt
