#include "iprior/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace iprior::parallel {

namespace {

std::atomic<int> override_threads{0};

int environment_threads() {
    const char *env = std::getenv("IPRIOR_THREADS");
    if (env == nullptr)
        return 0;
    try {
        const int v = std::stoi(env);
        return v > 0 ? v : 0;
    } catch (const std::exception &) {
        return 0;
    }
}

} // namespace

int thread_limit() {
    if (const int t = override_threads.load(); t > 0)
        return t;
    static const int from_env = environment_threads();
    if (from_env > 0)
        return from_env;
    return omp_get_max_threads();
}

void set_thread_limit(int threads) { override_threads.store(threads > 0 ? threads : 0); }

void hadamard_inplace(Matrix &out, const Matrix &b) {
    if (out.rows() != b.rows() || out.cols() != b.cols())
        raise(ErrorCode::spec_error, "hadamard: shape mismatch");
    const Index cols = out.cols();
#pragma omp parallel for schedule(static) num_threads(thread_limit())
    for (Index j = 0; j < cols; ++j)
        out.col(j).array() *= b.col(j).array();
}

Matrix rotate(const Matrix &basis, const Matrix &a) {
    const Index n = basis.cols();
    constexpr Index block = 64;
    const Index blocks = (n + block - 1) / block;
    Matrix tmp(a.rows(), n);
    Matrix out(n, n);
    // Column blocks of A·U and of Uᵀ(A·U) are independent GEMMs.
#pragma omp parallel for schedule(static) num_threads(thread_limit())
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * block;
        const Index width = std::min(block, n - start);
        tmp.middleCols(start, width).noalias() = a * basis.middleCols(start, width);
    }
#pragma omp parallel for schedule(static) num_threads(thread_limit())
    for (Index b = 0; b < blocks; ++b) {
        const Index start = b * block;
        const Index width = std::min(block, n - start);
        out.middleCols(start, width).noalias() = basis.transpose() * tmp.middleCols(start, width);
    }
    return (out + out.transpose()) * 0.5;
}

namespace serial {

void hadamard_inplace(Matrix &out, const Matrix &b) {
    if (out.rows() != b.rows() || out.cols() != b.cols())
        raise(ErrorCode::spec_error, "hadamard: shape mismatch");
    out.array() *= b.array();
}

Matrix rotate(const Matrix &basis, const Matrix &a) {
    Matrix out = basis.transpose() * a * basis;
    return (out + out.transpose()) * 0.5;
}

} // namespace serial
} // namespace iprior::parallel
