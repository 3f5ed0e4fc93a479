#pragma once

#include "iprior/estimate.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace iprior::testing {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Matrix normal_matrix(std::mt19937_64 &g, Index rows, Index cols) {
    std::normal_distribution<double> d;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = d(g);
    return m;
}

inline Vector normal_vector(std::mt19937_64 &g, Index n) { return normal_matrix(g, n, 1).col(0); }

inline Matrix random_symmetric(std::mt19937_64 &g, Index n) {
    const Matrix a = normal_matrix(g, n, n);
    return 0.5 * (a + a.transpose());
}

inline std::vector<std::string> random_labels(std::mt19937_64 &g, Index n, int levels) {
    std::uniform_int_distribution<int> d(0, levels - 1);
    std::vector<std::string> out;
    for (Index i = 0; i < n; ++i)
        out.push_back(std::string(1, static_cast<char>('A' + d(g))));
    return out;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

inline double max_abs(const Matrix &m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Three-covariate random dataset: x (real 1-d), z (real 2-d), g (categorical).
inline Dataset random_dataset(std::mt19937_64 &g, Index n) {
    Dataset d;
    d.response_name = "y";
    d.columns.push_back(CovariateColumn::real("x", normal_matrix(g, n, 1)));
    d.columns.push_back(CovariateColumn::real("z", normal_matrix(g, n, 2)));
    d.columns.push_back(CovariateColumn::categorical("g", random_labels(g, n, 3)));
    d.response = normal_vector(g, n);
    return d;
}

inline ModelSpec three_way_spec(Parameterization p = Parameterization::parsimonious) {
    ModelSpec s;
    s.anova = AnovaSpec::from_sperner({"x", "z", "g"}, {{0, 2}, {1}}, p);
    s.kernels = {KernelSpec::fbm(0.5), KernelSpec::canonical_linear(), KernelSpec::pearson()};
    return s;
}

} // namespace iprior::testing
