#pragma once

#include <stdexcept>
#include <string>

namespace ranklens {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad experiment configuration or malformed input files. CLI exit code 2.
struct config_error : error {
    using error::error;
};

// A pipeline stage was invoked before its upstream artifact exists. CLI exit code 3.
struct missing_artifact_error : error {
    using error::error;
};

// A numerical invariant (conservation, shape consistency, finite loss) failed.
// Never downgraded to a warning. CLI exit code 4.
struct numeric_error : error {
    using error::error;
};

}  // namespace ranklens
