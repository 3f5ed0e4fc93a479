#include "iprior/anova.hpp"

#include "iprior/parallel.hpp"

#include <algorithm>
#include <set>

namespace iprior {

std::string_view to_string(Parameterization p) noexcept {
    return p == Parameterization::parsimonious ? "parsimonious" : "extended";
}

Parameterization parse_parameterization(std::string_view text) {
    if (text == "parsimonious")
        return Parameterization::parsimonious;
    if (text == "extended")
        return Parameterization::extended;
    raise(ErrorCode::spec_error, "unknown parameterization '" + std::string(text) + "'");
}

namespace {

bool term_less(const Term &a, const Term &b) {
    if (a.size() != b.size())
        return a.size() < b.size();
    return a < b;
}

std::string describe(const Term &t) {
    std::string s = "{";
    for (std::size_t i = 0; i < t.size(); ++i)
        s += (i ? "," : "") + std::to_string(t[i]);
    return s + "}";
}

} // namespace

std::vector<Term> canonical_terms(std::vector<Term> terms) {
    for (auto &t : terms) {
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
    }
    std::sort(terms.begin(), terms.end(), term_less);
    return terms;
}

std::vector<Term> expand_sperner(const std::vector<Term> &family) {
    std::vector<std::set<std::size_t>> members;
    for (const auto &m : family) {
        if (m.empty())
            raise(ErrorCode::spec_error, "sperner family: empty member");
        members.emplace_back(m.begin(), m.end());
    }
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = 0; b < members.size(); ++b) {
            if (a == b)
                continue;
            if (std::includes(members[b].begin(), members[b].end(), members[a].begin(), members[a].end())) {
                const Term ta(members[a].begin(), members[a].end());
                const Term tb(members[b].begin(), members[b].end());
                raise(ErrorCode::spec_error, "not a Sperner family: " + describe(tb) + " contains " + describe(ta));
            }
        }
    }
    std::set<Term> out;
    for (const auto &m : members) {
        const Term base(m.begin(), m.end());
        const std::size_t k = base.size();
        if (k >= 63)
            raise(ErrorCode::spec_error, "sperner family: member too large");
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << k); ++mask) {
            Term t;
            for (std::size_t i = 0; i < k; ++i)
                if (mask & (std::uint64_t{1} << i))
                    t.push_back(base[i]);
            out.insert(std::move(t));
        }
    }
    return canonical_terms(std::vector<Term>(out.begin(), out.end()));
}

AnovaSpec AnovaSpec::from_terms(std::vector<std::string> covariates, std::vector<Term> terms, Parameterization p) {
    AnovaSpec s;
    s.covariates = std::move(covariates);
    s.terms = canonical_terms(std::move(terms));
    s.parameterization = p;
    s.validate();
    return s;
}

AnovaSpec AnovaSpec::from_sperner(std::vector<std::string> covariates, const std::vector<Term> &family,
                                  Parameterization p) {
    return from_terms(std::move(covariates), expand_sperner(family), p);
}

void AnovaSpec::validate() const {
    if (terms.empty())
        raise(ErrorCode::spec_error, "anova: no terms");
    std::set<std::string> names(covariates.begin(), covariates.end());
    if (names.size() != covariates.size())
        raise(ErrorCode::spec_error, "anova: duplicate covariate names");
    std::set<Term> seen;
    for (const auto &t : terms) {
        if (t.empty())
            raise(ErrorCode::spec_error, "anova: empty term");
        if (!std::is_sorted(t.begin(), t.end()) || std::adjacent_find(t.begin(), t.end()) != t.end())
            raise(ErrorCode::spec_error, "anova: term " + describe(t) + " is not a sorted set");
        if (t.back() >= covariates.size())
            raise(ErrorCode::spec_error, "anova: term " + describe(t) + " references an unknown covariate");
        if (!seen.insert(t).second)
            raise(ErrorCode::spec_error, "anova: duplicate term " + term_name(t));
    }
}

std::vector<std::size_t> AnovaSpec::scale_covariates() const {
    std::set<std::size_t> live;
    for (const auto &t : terms)
        live.insert(t.begin(), t.end());
    return {live.begin(), live.end()};
}

std::size_t AnovaSpec::num_scales() const {
    return parameterization == Parameterization::parsimonious ? scale_covariates().size() : terms.size();
}

std::string AnovaSpec::term_name(const Term &t) const {
    std::string s;
    for (std::size_t i = 0; i < t.size(); ++i)
        s += (i ? "*" : "") + covariates[t[i]];
    return s;
}

std::vector<std::string> AnovaSpec::scale_names() const {
    std::vector<std::string> names;
    if (parameterization == Parameterization::parsimonious) {
        for (const auto v : scale_covariates())
            names.push_back(covariates[v]);
    } else {
        for (const auto &t : terms)
            names.push_back(term_name(t));
    }
    return names;
}

namespace {

/// Position of each covariate in the parsimonious scale vector (−1 if dead).
std::vector<long> scale_slots(const AnovaSpec &spec) {
    std::vector<long> slot(spec.covariates.size(), -1);
    const auto live = spec.scale_covariates();
    for (std::size_t k = 0; k < live.size(); ++k)
        slot[live[k]] = static_cast<long>(k);
    return slot;
}

void check_scales(const AnovaSpec &spec, const Vector &scales) {
    if (static_cast<std::size_t>(scales.size()) != spec.num_scales())
        raise(ErrorCode::spec_error, "anova: expected " + std::to_string(spec.num_scales()) + " scale parameters, got " +
                                         std::to_string(scales.size()));
    if (!scales.allFinite())
        raise(ErrorCode::numerical_error, "anova: non-finite scale parameter");
}

} // namespace

Vector term_coefficients(const AnovaSpec &spec, const Vector &scales) {
    check_scales(spec, scales);
    const auto s_count = static_cast<Index>(spec.terms.size());
    if (spec.parameterization == Parameterization::extended)
        return scales;
    const auto slot = scale_slots(spec);
    Vector g(s_count);
    for (Index s = 0; s < s_count; ++s) {
        double c = 1.0;
        for (const auto v : spec.terms[static_cast<std::size_t>(s)])
            c *= scales(slot[v]);
        g(s) = c;
    }
    return g;
}

Vector term_coefficient_derivative(const AnovaSpec &spec, const Vector &scales, std::size_t k) {
    check_scales(spec, scales);
    if (k >= spec.num_scales())
        raise(ErrorCode::spec_error, "anova: scale index out of range");
    const auto s_count = static_cast<Index>(spec.terms.size());
    Vector dg = Vector::Zero(s_count);
    if (spec.parameterization == Parameterization::extended) {
        dg(static_cast<Index>(k)) = 1.0;
        return dg;
    }
    const auto slot = scale_slots(spec);
    for (Index s = 0; s < s_count; ++s) {
        const auto &t = spec.terms[static_cast<std::size_t>(s)];
        bool contains = false;
        double c = 1.0;
        for (const auto v : t) {
            if (slot[v] == static_cast<long>(k))
                contains = true;
            else
                c *= scales(slot[v]);
        }
        if (contains)
            dg(s) = c;
    }
    return dg;
}

TermCache::TermCache(const AnovaSpec &spec, const std::vector<Matrix> &grams) {
    spec.validate();
    if (grams.size() != spec.covariates.size())
        raise(ErrorCode::spec_error, "anova: expected one Gram per covariate");
    products_.reserve(spec.terms.size());
    for (const auto &t : spec.terms) {
        const Matrix &first = grams[t.front()];
        if (first.size() == 0)
            raise(ErrorCode::spec_error, "anova: term " + spec.term_name(t) + " references a covariate with no Gram");
        Matrix p = first;
        for (std::size_t i = 1; i < t.size(); ++i)
            parallel::hadamard_inplace(p, grams[t[i]]);
        products_.push_back(std::move(p));
    }
}

namespace {

Matrix combine(const TermCache &cache, const Vector &coeffs) {
    Matrix h = Matrix::Zero(cache.rows(), cache.cols());
    for (std::size_t s = 0; s < cache.size(); ++s) {
        const double c = coeffs(static_cast<Index>(s));
        if (c != 0.0)
            h.noalias() += c * cache.product(s);
    }
    return h;
}

} // namespace

Matrix assemble(const AnovaSpec &spec, const Vector &scales, const TermCache &cache) {
    if (cache.size() != spec.terms.size())
        raise(ErrorCode::spec_error, "anova: term cache does not match spec");
    return combine(cache, term_coefficients(spec, scales));
}

Matrix assemble(const AnovaSpec &spec, const Vector &scales, const std::vector<Matrix> &grams) {
    return assemble(spec, scales, TermCache(spec, grams));
}

Matrix d_assemble(const AnovaSpec &spec, const Vector &scales, const TermCache &cache, std::size_t k) {
    if (cache.size() != spec.terms.size())
        raise(ErrorCode::spec_error, "anova: term cache does not match spec");
    return combine(cache, term_coefficient_derivative(spec, scales, k));
}

} // namespace iprior
