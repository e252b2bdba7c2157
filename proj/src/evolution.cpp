#include "opcalc/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "opcalc/errors.hpp"
#include "opcalc/linalg.hpp"

namespace opcalc {

Coefficient Coefficient::constant(double c) {
    Coefficient out;
    out.kind = Kind::Const;
    out.value = c;
    return out;
}

Coefficient Coefficient::sine() {
    Coefficient out;
    out.kind = Kind::Sin;
    return out;
}

Coefficient Coefficient::cosine() {
    Coefficient out;
    out.kind = Kind::Cos;
    return out;
}

Coefficient Coefficient::poly(std::vector<double> c) {
    if (c.empty()) throw std::invalid_argument("poly coefficient needs at least one entry");
    Coefficient out;
    out.kind = Kind::Poly;
    out.coeffs = std::move(c);
    return out;
}

double Coefficient::operator()(double t) const {
    switch (kind) {
        case Kind::Const: return value;
        case Kind::Sin: return std::sin(t);
        case Kind::Cos: return std::cos(t);
        case Kind::Poly: {
            double acc = 0.0;
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
            return acc;
        }
    }
    return 0.0;
}

double Coefficient::integral(double s, double t) const {
    switch (kind) {
        case Kind::Const: return value * (t - s);
        case Kind::Sin: return std::cos(s) - std::cos(t);
        case Kind::Cos: return std::sin(t) - std::sin(s);
        case Kind::Poly: {
            // antiderivative sum_j c_j x^{j+1}/(j+1), Horner at both ends
            auto anti = [&](double x) {
                double acc = 0.0;
                for (size_t j = coeffs.size(); j-- > 0;)
                    acc = acc * x + coeffs[j] / static_cast<double>(j + 1);
                return acc * x;
            };
            return anti(t) - anti(s);
        }
    }
    return 0.0;
}

void GeneratorSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("generator dim must be positive");
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("horizon T must be positive and finite");
    // an empty term list is the zero generator, U == I
    for (const auto& term : terms) {
        if (term.matrix.dim() != dim) throw std::invalid_argument("term matrix dimension mismatch");
        if (!term.matrix.all_finite()) throw std::invalid_argument("term matrix has non-finite entries");
        if (term.coef.kind == Coefficient::Kind::Poly && term.coef.coeffs.empty())
            throw std::invalid_argument("poly coefficient needs at least one entry");
    }
}

ComplexMatrix GeneratorSpec::generator(double t) const {
    ComplexMatrix a(dim);
    for (const auto& term : terms) {
        const double c = term.coef(t);
        if (c == 0.0) continue;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) a(i, j) += c * term.matrix(i, j);
    }
    return a;
}

bool GeneratorSpec::commuting() const {
    for (size_t j = 0; j < terms.size(); ++j) {
        for (size_t k = j + 1; k < terms.size(); ++k) {
            const double bound = kTolCommute * term_norm(j) * term_norm(k);
            if (frobenius_norm(commutator(terms[j].matrix, terms[k].matrix)) > bound)
                return false;
        }
    }
    return true;
}

double GeneratorSpec::term_norm(size_t k) const {
    if (term_norms_.size() != terms.size()) {
        term_norms_.assign(terms.size(), -1.0);
    }
    if (term_norms_[k] < 0.0) term_norms_[k] = spectral_norm(terms[k].matrix);
    return term_norms_[k];
}

double GeneratorSpec::generator_norm_bound(double t) const {
    double bound = 0.0;
    for (size_t k = 0; k < terms.size(); ++k) bound += std::abs(terms[k].coef(t)) * term_norm(k);
    return bound;
}

namespace {

void check_time_window(const GeneratorSpec& spec, double t, double s) {
    const double lim = spec.T * (1.0 + 1e-12);
    if (!std::isfinite(t) || !std::isfinite(s) || std::abs(t) > lim || std::abs(s) > lim)
        throw std::invalid_argument("evaluation time outside the family horizon");
}

}  // namespace

ComplexMatrix propagate(const GeneratorSpec& spec, double t, double s, double step) {
    spec.validate();
    check_time_window(spec, t, s);
    if (step == 0.0) step = spec.T / static_cast<double>(kRk4DefaultSteps);
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive");

    ComplexMatrix u = ComplexMatrix::identity(spec.dim);
    if (t == s) return u;

    const double span = t - s;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(std::abs(span) / step)));
    const double h = span / nsteps;

    for (int m = 0; m < nsteps; ++m) {
        const double tau = s + h * m;
        // stability guard: one RK4 step only trusts ||A|| h <= 1
        if (spec.generator_norm_bound(tau + 0.5 * h) * std::abs(h) > 1.0)
            throw StepTooLarge("RK4 step too large for the generator norm; pass a smaller step");
        const ComplexMatrix a1 = spec.generator(tau);
        const ComplexMatrix a2 = spec.generator(tau + 0.5 * h);
        const ComplexMatrix a4 = spec.generator(tau + h);
        const ComplexMatrix k1 = a1 * u;
        const ComplexMatrix k2 = a2 * (u + (0.5 * h) * k1);
        const ComplexMatrix k3 = a2 * (u + (0.5 * h) * k2);
        const ComplexMatrix k4 = a4 * (u + h * k3);
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!u.all_finite()) throw Overflow("propagation produced non-finite entries");
    }
    return u;
}

ComplexMatrix closed_form_evolution(const GeneratorSpec& spec, double t, double s) {
    spec.validate();
    check_time_window(spec, t, s);
    if (!spec.commuting())
        throw NonCommuting("closed-form evolution requires pairwise commuting term matrices");
    ComplexMatrix e(spec.dim);
    for (const auto& term : spec.terms) {
        const double w = term.coef.integral(s, t);
        if (w == 0.0) continue;
        for (int i = 0; i < spec.dim; ++i)
            for (int j = 0; j < spec.dim; ++j) e(i, j) += w * term.matrix(i, j);
    }
    return matrix_exp(e);
}

struct EvolutionFamily::Impl {
    Method method = Method::Rk4;
    GeneratorSpec spec;
    std::string id;
    double step = 0.0;
    // product factors
    std::shared_ptr<Impl> f1, f2;

    mutable std::mutex mu;
    mutable std::map<std::pair<double, double>, ComplexMatrix> cache;

    ComplexMatrix eval(double t, double s) const {
        if (t == s) return ComplexMatrix::identity(spec.dim);
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = cache.find({t, s});
            if (it != cache.end()) return it->second;
        }
        ComplexMatrix u(spec.dim);
        switch (method) {
            case Method::ClosedForm: u = closed_form_evolution(spec, t, s); break;
            case Method::Rk4: u = propagate(spec, t, s, step); break;
            case Method::Product: u = f1->eval(t, s) * f2->eval(t, s); break;
        }
        std::lock_guard<std::mutex> lock(mu);
        return cache.emplace(std::pair<double, double>{t, s}, std::move(u)).first->second;
    }
};

EvolutionFamily EvolutionFamily::closed_form(GeneratorSpec spec, std::string id) {
    spec.validate();
    if (!spec.commuting())
        throw NonCommuting("closed-form evolution requires pairwise commuting term matrices");
    EvolutionFamily out;
    out.impl_ = std::make_shared<Impl>();
    out.impl_->method = Method::ClosedForm;
    out.impl_->spec = std::move(spec);
    out.impl_->id = std::move(id);
    return out;
}

EvolutionFamily EvolutionFamily::rk4(GeneratorSpec spec, double step, std::string id) {
    spec.validate();
    if (step == 0.0) step = spec.T / static_cast<double>(kRk4DefaultSteps);
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("step must be positive");
    EvolutionFamily out;
    out.impl_ = std::make_shared<Impl>();
    out.impl_->method = Method::Rk4;
    out.impl_->spec = std::move(spec);
    out.impl_->step = step;
    out.impl_->id = std::move(id);
    return out;
}

EvolutionFamily::Method EvolutionFamily::method() const { return impl_->method; }
const GeneratorSpec& EvolutionFamily::spec() const { return impl_->spec; }
const std::string& EvolutionFamily::id() const { return impl_->id; }
int EvolutionFamily::dim() const { return impl_->spec.dim; }
double EvolutionFamily::horizon() const { return impl_->spec.T; }
double EvolutionFamily::step() const { return impl_->step; }

ComplexMatrix EvolutionFamily::operator()(double t, double s) const {
    check_time_window(impl_->spec, t, s);
    return impl_->eval(t, s);
}

ComplexMatrix EvolutionFamily::generator(double t) const {
    if (impl_->method == Method::Product) {
        ComplexMatrix a = impl_->f1->spec.generator(t);
        a += impl_->f2->spec.generator(t);
        return a;
    }
    return impl_->spec.generator(t);
}

double EvolutionFamily::generator_norm_bound(double t) const {
    if (impl_->method == Method::Product)
        return impl_->f1->spec.generator_norm_bound(t) + impl_->f2->spec.generator_norm_bound(t);
    return impl_->spec.generator_norm_bound(t);
}

EvolutionFamily product_family(const EvolutionFamily& f1, const EvolutionFamily& f2) {
    if (f1.dim() != f2.dim()) throw std::invalid_argument("product factors must share a dimension");
    const GeneratorSpec& s1 = f1.impl_->spec;
    const GeneratorSpec& s2 = f2.impl_->spec;
    // fast accept when the term matrices commute pairwise; otherwise fall back
    // to sampling the evolutions themselves, which is the actual requirement
    bool terms_commute = true;
    for (size_t j = 0; terms_commute && j < s1.terms.size(); ++j) {
        for (size_t k = 0; k < s2.terms.size(); ++k) {
            const double bound = kTolCommute * s1.term_norm(j) * s2.term_norm(k);
            if (frobenius_norm(commutator(s1.terms[j].matrix, s2.terms[k].matrix)) > bound) {
                terms_commute = false;
                break;
            }
        }
    }
    if (!terms_commute) {
        const double T = std::min(f1.horizon(), f2.horizon());
        const double grid[] = {-0.8 * T, -0.3 * T, 0.2 * T, 0.6 * T, 0.9 * T};
        for (double t : grid) {
            for (double r : grid) {
                if (!(r < t)) continue;
                const ComplexMatrix u1 = f1(t, r);
                const ComplexMatrix u2 = f2(t, r);
                const double bound = kTolCommute * frobenius_norm(u1) * frobenius_norm(u2);
                if (frobenius_norm(commutator(u1, u2)) > bound)
                    throw NonCommuting("product factors fail the sampled commutation bound");
            }
        }
    }
    EvolutionFamily out;
    out.impl_ = std::make_shared<EvolutionFamily::Impl>();
    out.impl_->method = EvolutionFamily::Method::Product;
    out.impl_->f1 = f1.impl_;
    out.impl_->f2 = f2.impl_;
    out.impl_->id = f1.id() + "*" + f2.id();
    // merged spec so dim/T/generator sums work uniformly
    GeneratorSpec merged;
    merged.dim = s1.dim;
    merged.T = std::min(s1.T, s2.T);
    merged.terms = s1.terms;
    merged.terms.insert(merged.terms.end(), s2.terms.begin(), s2.terms.end());
    out.impl_->spec = std::move(merged);
    return out;
}

SemigroupReport verify_semigroup(const EvolutionFamily& fam,
                                 const std::vector<std::array<double, 3>>& triples) {
    std::vector<std::array<double, 3>> pts = triples;
    if (pts.empty()) {
        const double T = fam.horizon();
        const double grid[] = {-0.9 * T, -0.4 * T, 0.0, 0.3 * T, 0.65 * T, 0.9 * T};
        for (double s : grid)
            for (double r : grid)
                for (double t : grid)
                    if (s < r && r < t) pts.push_back({t, r, s});
    }
    SemigroupReport report;
    const ComplexMatrix eye = ComplexMatrix::identity(fam.dim());
    for (const auto& [t, r, s] : pts) {
        const ComplexMatrix uts = fam(t, s);
        report.scale = std::max(report.scale, 1.0 + frobenius_norm(uts));
        const ComplexMatrix chain = fam(t, r) * fam(r, s) - uts;
        report.max_chain_residual = std::max(report.max_chain_residual, frobenius_norm(chain));
        const ComplexMatrix inv = fam(s, t) * uts - eye;
        report.max_inverse_residual =
            std::max(report.max_inverse_residual, frobenius_norm(inv));
    }
    return report;
}

std::vector<ComplexMatrix> evaluate_path(const EvolutionFamily& fam, double s,
                                         const std::vector<double>& taus) {
    std::vector<ComplexMatrix> out;
    out.reserve(taus.size());
    if (taus.empty()) return out;
    for (size_t j = 1; j < taus.size(); ++j) {
        const bool up = taus.back() >= taus.front();
        if ((up && taus[j] < taus[j - 1]) || (!up && taus[j] > taus[j - 1]))
            throw std::invalid_argument("path grid must be monotone");
    }
    if (fam.method() == EvolutionFamily::Method::ClosedForm) {
        for (double tau : taus) out.push_back(fam(s, tau));
        return out;
    }
    // incremental sweep; U(s, tau) maps data at tau to data at s, so extend on
    // the right: U(s, b) = U(s, a) * U(a, b)
    ComplexMatrix cur = fam(s, taus[0]);
    out.push_back(cur);
    for (size_t j = 1; j < taus.size(); ++j) {
        cur = cur * fam(taus[j - 1], taus[j]);
        out.push_back(cur);
    }
    return out;
}

}  // namespace opcalc
