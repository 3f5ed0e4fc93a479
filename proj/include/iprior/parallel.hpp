#pragma once

// Data-parallel fill kernels. Every OpenMP kernel here has a serial twin in
// iprior::parallel::serial with the same signature; tests hold the two to
// bit-identical output and bench/ compares their throughput.

#include "iprior/common.hpp"

#include <cstddef>

namespace iprior::parallel {

/// Thread cap: IPRIOR_THREADS when set to a positive integer, else the OpenMP default.
int thread_limit();

/// Overrides the cap for the rest of the process (0 restores the environment/default).
void set_thread_limit(int threads);

/// out(i, j) = entry(i, j) over the whole (pre-sized) matrix.
template <class Entry>
void fill(Matrix &out, Entry &&entry) {
    const Index rows = out.rows();
    const Index cols = out.cols();
#pragma omp parallel for schedule(static) num_threads(thread_limit())
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            out(i, j) = entry(i, j);
}

/// Symmetric fill of a square matrix: entry is evaluated once per unordered pair.
template <class Entry>
void fill_symmetric(Matrix &out, Entry &&entry) {
    const Index n = out.rows();
#pragma omp parallel for schedule(dynamic, 8) num_threads(thread_limit())
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            const double v = entry(i, j);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
}

/// out = a ⊙ b (entrywise); shapes must agree.
void hadamard_inplace(Matrix &out, const Matrix &b);

/// body(k) for k in [0, count), iterations independent.
template <class Body>
void for_each_index(std::size_t count, Body &&body) {
    const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_limit())
    for (long long k = 0; k < n; ++k)
        body(static_cast<std::size_t>(k));
}

/// Uᵀ A U for symmetric A; result symmetrized.
Matrix rotate(const Matrix &basis, const Matrix &a);

namespace serial {

template <class Entry>
void fill(Matrix &out, Entry &&entry) {
    for (Index j = 0; j < out.cols(); ++j)
        for (Index i = 0; i < out.rows(); ++i)
            out(i, j) = entry(i, j);
}

template <class Entry>
void fill_symmetric(Matrix &out, Entry &&entry) {
    const Index n = out.rows();
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            const double v = entry(i, j);
            out(i, j) = v;
            out(j, i) = v;
        }
    }
}

void hadamard_inplace(Matrix &out, const Matrix &b);

template <class Body>
void for_each_index(std::size_t count, Body &&body) {
    for (std::size_t k = 0; k < count; ++k)
        body(k);
}

Matrix rotate(const Matrix &basis, const Matrix &a);

} // namespace serial
} // namespace iprior::parallel
