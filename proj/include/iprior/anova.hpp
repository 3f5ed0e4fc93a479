#pragma once

#include "iprior/common.hpp"

#include <string>
#include <vector>

namespace iprior {

enum class Parameterization { parsimonious, extended };

std::string_view to_string(Parameterization p) noexcept;
Parameterization parse_parameterization(std::string_view text);

/// Sorted covariate indices of one interaction term (never empty).
using Term = std::vector<std::size_t>;

/// All nonempty subsets of the members of a Sperner family, deduplicated and
/// ordered by (size, lexicographic). Throws spec_error naming a violating
/// pair when one member contains another.
std::vector<Term> expand_sperner(const std::vector<Term> &family);

/// Orders terms by (size, lexicographic) after sorting each one.
std::vector<Term> canonical_terms(std::vector<Term> terms);

/// Interaction structure of an ANOVA kernel. The intercept is not a term.
struct AnovaSpec {
    std::vector<std::string> covariates;
    std::vector<Term> terms;
    Parameterization parameterization = Parameterization::parsimonious;

    /// Validates, sorts terms and rejects duplicates.
    static AnovaSpec from_terms(std::vector<std::string> covariates, std::vector<Term> terms, Parameterization p);
    static AnovaSpec from_sperner(std::vector<std::string> covariates, const std::vector<Term> &family,
                                  Parameterization p);

    void validate() const;

    /// Number of scale parameters: covariates in some term (parsimonious) or terms (extended).
    std::size_t num_scales() const;
    /// Parsimonious: covariate index behind each scale parameter.
    std::vector<std::size_t> scale_covariates() const;
    /// Scale-parameter names, `C`, `X` or `C*X` style.
    std::vector<std::string> scale_names() const;
    std::string term_name(const Term &t) const;
};

/// g_s(λ): parsimonious Π_{v∈A_s} λ_v, extended υ_s.
Vector term_coefficients(const AnovaSpec &spec, const Vector &scales);

/// ∂g_s/∂λ_k.
Vector term_coefficient_derivative(const AnovaSpec &spec, const Vector &scales, std::size_t k);

/// Entrywise products Π_{v∈A} H_v for every term, computed once and reused
/// across scale updates. Works for square train Grams and rectangular cross Grams.
class TermCache {
public:
    TermCache() = default;
    TermCache(const AnovaSpec &spec, const std::vector<Matrix> &grams);

    std::size_t size() const noexcept { return products_.size(); }
    const Matrix &product(std::size_t s) const { return products_[s]; }
    const std::vector<Matrix> &products() const noexcept { return products_; }
    Index rows() const noexcept { return products_.empty() ? 0 : products_.front().rows(); }
    Index cols() const noexcept { return products_.empty() ? 0 : products_.front().cols(); }

private:
    std::vector<Matrix> products_;
};

/// H_λ = Σ_s g_s(λ) Π_{v∈A_s} H_v.
Matrix assemble(const AnovaSpec &spec, const Vector &scales, const TermCache &cache);
Matrix assemble(const AnovaSpec &spec, const Vector &scales, const std::vector<Matrix> &grams);

/// ∂H_λ/∂λ_k, exact.
Matrix d_assemble(const AnovaSpec &spec, const Vector &scales, const TermCache &cache, std::size_t k);

} // namespace iprior
