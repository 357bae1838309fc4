#pragma once
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace pathsgl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = std::size_t;

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorCode
{
    InvalidArgument,
    Io,
    MissingValue,
    DuplicateId,
    RaggedRow,
    SampleMismatch,
    AlphaZero,
    UniverseMismatch,
    ZeroExpectation,
    OutOfRange,
    EmptyTruth,
    ZeroMafSum,
    InvalidTopology,
    DegenerateVariance,
};

const char* to_string(ErrorCode code);

/// All library failures surface as this exception; `code()` identifies the contract violated.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg)
{
    if (!cond) throw Error(code, msg);
}

} // namespace pathsgl
