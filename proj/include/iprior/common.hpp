#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iprior {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Stable error categories. The CLI maps each one onto a documented exit code.
enum class ErrorCode {
    load_error,
    spec_error,
    numerical_error,
    fit_error,
    config_error,
    schema_error,
    data_mismatch,
};

std::string_view error_code_name(ErrorCode code) noexcept;
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string &message);

} // namespace iprior

#include <functional>

namespace iprior {

/// Diagnostics sink (numerical events, tie-breaks, skipped probes). Defaults to stderr.
using LogSink = std::function<void(std::string_view)>;
void set_log_sink(LogSink sink);
void log_event(std::string_view message);

} // namespace iprior
