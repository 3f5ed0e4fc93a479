#include "iprior/common.hpp"

namespace iprior {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::load_error: return "LOAD_ERROR";
    case ErrorCode::spec_error: return "SPEC_ERROR";
    case ErrorCode::numerical_error: return "NUMERICAL_ERROR";
    case ErrorCode::fit_error: return "FIT_ERROR";
    case ErrorCode::config_error: return "CONFIG_ERROR";
    case ErrorCode::schema_error: return "SCHEMA_ERROR";
    case ErrorCode::data_mismatch: return "DATA_MISMATCH";
    }
    return "ERROR";
}

int exit_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::config_error: return 2;
    case ErrorCode::schema_error: return 3;
    case ErrorCode::data_mismatch: return 4;
    case ErrorCode::load_error: return 5;
    case ErrorCode::spec_error: return 6;
    case ErrorCode::fit_error: return 7;
    case ErrorCode::numerical_error: return 8;
    }
    return 1;
}

void raise(ErrorCode code, const std::string &message) { throw Error(code, message); }

} // namespace iprior

#include <iostream>
#include <mutex>

namespace iprior {

namespace {
std::mutex sink_mutex;
LogSink &sink() {
    static LogSink s = [](std::string_view m) { std::cerr << "iprior: " << m << '\n'; };
    return s;
}
} // namespace

void set_log_sink(LogSink s) {
    std::lock_guard lock(sink_mutex);
    sink() = s ? std::move(s) : LogSink([](std::string_view) {});
}

void log_event(std::string_view message) {
    std::lock_guard lock(sink_mutex);
    sink()(message);
}

} // namespace iprior
