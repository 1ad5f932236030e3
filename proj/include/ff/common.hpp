#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ff {

// Error categories used across the library. All map onto std::exception so
// callers can catch coarsely; the CLI translates them into exit code 2.
struct parameter_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct state_error : std::logic_error {
    using std::logic_error::logic_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw parameter_error(msg);
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
    for (T x : v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

}  // namespace ff
