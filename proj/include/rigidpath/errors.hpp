#pragma once

#include <stdexcept>
#include <string>

namespace rigidpath {

// Malformed input file. Carries the 1-based line number of the offending line.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, long line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// Point configuration from which no fundamental matrix can be recovered.
class degeneracy_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A stage contract was violated at runtime (empty reliable set, uncovered
// trajectory, too few usable frame pairs, ...).
class pipeline_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed a frame index or range outside the video.
class bounds_error : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

} // namespace rigidpath
