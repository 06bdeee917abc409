#pragma once
// Divergence operators: volume form, Riemannian metric, affine connection,
// s-densities, closed-form perturbations, and opaque (black-box) operators.

#include <divkit/errors.hpp>
#include <divkit/expr.hpp>
#include <divkit/geometry.hpp>

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace divkit {

namespace detail {

inline void require_square(const ExprMatrix& m, std::size_t n, const char* what) {
    if (m.size() != n) throw ValidationError(std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n), 0);
    for (const auto& row : m)
        if (row.size() != n)
            throw ValidationError(std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n), 0);
}

/// Laplace expansion along the first row.
inline Expr determinant(const ExprMatrix& m) {
    const std::size_t n = m.size();
    if (n == 1) return m[0][0];
    if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Expr det(0.0);
    for (std::size_t c = 0; c < n; ++c) {
        ExprMatrix minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Expr> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(m[r][k]);
            minor.push_back(std::move(row));
        }
        const Expr term = m[0][c] * determinant(minor);
        det = (c % 2 == 0) ? det + term : det - term;
    }
    return det;
}

/// Inverse through the adjugate; n <= 3.
inline ExprMatrix inverse(const ExprMatrix& m) {
    const std::size_t n = m.size();
    if (n > 3) throw PreconditionError("symbolic matrix inverse is limited to n <= 3");
    const Expr det = determinant(m);
    ExprMatrix inv(n, std::vector<Expr>(n, Expr(0.0)));
    if (n == 1) {
        inv[0][0] = Expr(1.0) / det;
        return inv;
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            ExprMatrix minor;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == c) continue;
                std::vector<Expr> row;
                for (std::size_t j = 0; j < n; ++j)
                    if (j != r) row.push_back(m[i][j]);
                minor.push_back(std::move(row));
            }
            const Expr cof = determinant(minor);
            inv[r][c] = ((r + c) % 2 == 0 ? cof : -cof) / det;
        }
    return inv;
}

}  // namespace detail

/// Symmetric coefficient matrix g_ij with positive determinant on the chart.
struct Metric {
    ChartRef chart;
    ExprMatrix g;

    Metric(ChartRef c, ExprMatrix coeffs) : chart(std::move(c)), g(std::move(coeffs)) {
        if (!chart) throw PreconditionError("metric without chart");
        const std::size_t n = chart->dim();
        detail::require_square(g, n, "metric");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (!structurally_equal(g[i][j], g[j][i]))
                    throw ValidationError("metric is not symmetric", 0);
        const Expr det = determinant();
        for (const Point& p : sample_points(*chart, VolumeForm::kValidationPoints, VolumeForm::kValidationSeed)) {
            double v = 0.0;
            try {
                v = eval(det, p);
            } catch (const DomainError& e) {
                throw ValidationError(std::string("metric undefined at a sample point: ") + e.what(), 0);
            }
            if (!(v > 0.0)) throw ValidationError("metric determinant is not positive on the chart", 0);
        }
    }

    Expr determinant() const { return detail::determinant(g); }
    Expr sqrt_det() const { return sqrt(determinant()); }

    /// Riemannian volume form sqrt(G) dx.
    VolumeForm volume() const { return {chart, sqrt_det()}; }
};

/// Coefficients with nabla_{d_i} d_j = sum_k Gamma^k_ij d_k. Torsion is allowed.
struct Connection {
    ChartRef chart;
    std::vector<Expr> coefficients;  // index (k * n + i) * n + j

    explicit Connection(ChartRef c) : chart(std::move(c)) {
        if (!chart) throw PreconditionError("connection without chart");
        const std::size_t n = chart->dim();
        coefficients.assign(n * n * n, Expr(0.0));
    }

    std::size_t dim() const { return chart->dim(); }
    const Expr& operator()(std::size_t k, std::size_t i, std::size_t j) const {
        return coefficients.at((k * dim() + i) * dim() + j);
    }
    Expr& operator()(std::size_t k, std::size_t i, std::size_t j) {
        return coefficients.at((k * dim() + i) * dim() + j);
    }
};

/// Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
inline Connection levi_civita(const Metric& metric) {
    const std::size_t n = metric.chart->dim();
    const auto& names = metric.chart->coordinates();
    const ExprMatrix ginv = detail::inverse(metric.g);
    Connection gamma(metric.chart);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Expr sum(0.0);
                for (std::size_t l = 0; l < n; ++l) {
                    const Expr christoffel_first =
                        diff(metric.g[j][l], names[i]) + diff(metric.g[i][l], names[j]) - diff(metric.g[i][j], names[l]);
                    sum += ginv[k][l] * christoffel_first;
                }
                gamma(k, i, j) = Expr(0.5) * sum;
            }
    return gamma;
}

// ---------------------------------------------------------------------------
// The operators

/// div_Omega(X) = X(rho)/rho + sum_i d_i X^i, the coefficient of L_X Omega over Omega.
inline Expr div_volume(const VolumeForm& omega, const VectorField& x) {
    require_same_chart(omega.chart, x.chart);
    return apply_field(x, omega.density) / omega.density + flat_divergence(x);
}

/// sum_i G^{-1/2} d_i (G^{1/2} X^i).
inline Expr div_metric(const Metric& metric, const VectorField& x) {
    require_same_chart(metric.chart, x.chart);
    const Expr root = metric.sqrt_det();
    const auto& names = x.chart->coordinates();
    Expr out(0.0);
    for (std::size_t i = 0; i < x.dim(); ++i) out += diff(root * x[i], names[i]) / root;
    return out;
}

/// A_X = L_X - nabla_X as the matrix (A_X)^k_j = -(d_j X^k + sum_i Gamma^k_ij X^i).
inline ExprMatrix alie_map(const Connection& gamma, const VectorField& x) {
    require_same_chart(gamma.chart, x.chart);
    const std::size_t n = x.dim();
    const auto& names = x.chart->coordinates();
    ExprMatrix a(n, std::vector<Expr>(n, Expr(0.0)));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) {
            Expr entry = diff(x[k], names[j]);
            for (std::size_t i = 0; i < n; ++i) entry += gamma(k, i, j) * x[i];
            a[k][j] = -entry;
        }
    return a;
}

/// -trace(A_X) = sum_k d_k X^k + sum_i (sum_k Gamma^k_ik) X^i.
inline Expr div_affine(const Connection& gamma, const VectorField& x) {
    require_same_chart(gamma.chart, x.chart);
    Expr out = flat_divergence(x);
    for (std::size_t i = 0; i < x.dim(); ++i) {
        Expr trace(0.0);
        for (std::size_t k = 0; k < x.dim(); ++k) trace += gamma(k, i, k);
        out += trace * x[i];
    }
    return out;
}

/// Torsion connection nabla^T_Y X = -A_X(Y).
inline VectorField torsion_connection_apply(const Connection& gamma, const VectorField& y, const VectorField& x) {
    require_same_chart(gamma.chart, y.chart);
    require_same_chart(gamma.chart, x.chart);
    const ExprMatrix a = alie_map(gamma, x);
    std::vector<Expr> comps;
    for (std::size_t k = 0; k < x.dim(); ++k) {
        Expr c(0.0);
        for (std::size_t j = 0; j < x.dim(); ++j) c -= a[k][j] * y[j];
        comps.push_back(c);
    }
    return {x.chart, std::move(comps)};
}

/// Divergence of the s-density rho |dx|^s: X(log rho) + s sum_i d_i X^i.
/// Satisfies D(fX) = f D(X) + s X(f).
inline Expr div_sdensity(const Expr& rho, double s, const VectorField& x) {
    return apply_field(x, log(rho)) + Expr(s) * flat_divergence(x);
}

/// c_i = d_i rho - rho sum_k Gamma^k_ik; nabla Omega = 0 exactly when every c_i vanishes.
inline OneForm parallel_residual(const VolumeForm& omega, const Connection& gamma) {
    require_same_chart(omega.chart, gamma.chart);
    const std::size_t n = gamma.dim();
    const auto& names = omega.chart->coordinates();
    std::vector<Expr> comps;
    for (std::size_t i = 0; i < n; ++i) {
        Expr trace(0.0);
        for (std::size_t k = 0; k < n; ++k) trace += gamma(k, i, k);
        comps.push_back(diff(omega.density, names[i]) - omega.density * trace);
    }
    return {omega.chart, std::move(comps)};
}

// ---------------------------------------------------------------------------
// Uniform operator handle

/// A candidate divergence operator. All kinds except `blackbox` have a symbolic form.
class DivOperator {
public:
    enum class Kind { Volume, Metric, Affine, SDensity, Perturbed, Blackbox };
    using Contract = std::function<double(const VectorField&, std::span<const double>)>;

    static DivOperator volume(VolumeForm omega) {
        ChartRef c = omega.chart;
        return DivOperator(Kind::Volume, std::move(c), VolumePayload{std::move(omega)});
    }
    static DivOperator metric(Metric g) {
        ChartRef c = g.chart;
        return DivOperator(Kind::Metric, std::move(c), MetricPayload{std::move(g)});
    }
    static DivOperator affine(Connection gamma) {
        ChartRef c = gamma.chart;
        return DivOperator(Kind::Affine, std::move(c), AffinePayload{std::move(gamma)});
    }
    /// Positivity of rho is validated on the standard sample set.
    static DivOperator sdensity(ChartRef chart, Expr rho, double s) {
        VolumeForm check(chart, rho);
        return DivOperator(Kind::SDensity, std::move(chart), SDensityPayload{std::move(rho), s});
    }
    static DivOperator perturbed(const DivOperator& base, OneForm e) {
        require_same_chart(base.chart(), e.chart);
        return DivOperator(Kind::Perturbed, base.chart(),
                           PerturbedPayload{std::make_shared<const DivOperator>(base), std::move(e)});
    }
    /// `weight` is the Leibniz coefficient s the contract is expected to satisfy.
    static DivOperator blackbox(ChartRef chart, Contract contract, double weight = 1.0) {
        return DivOperator(Kind::Blackbox, std::move(chart), BlackboxPayload{std::move(contract), weight});
    }
    /// Hides the symbolic form of `op` behind the point-evaluation contract.
    static DivOperator opaque(const DivOperator& op);

    Kind kind() const { return kind_; }
    const ChartRef& chart() const { return chart_; }

    bool is_symbolic() const {
        if (kind_ == Kind::Blackbox) return false;
        if (kind_ == Kind::Perturbed) return std::get<PerturbedPayload>(payload_).base->is_symbolic();
        return true;
    }

    /// Leibniz coefficient: 1 for volume-type operators, s for s-densities.
    double leibniz_weight() const {
        switch (kind_) {
            case Kind::SDensity:
                return std::get<SDensityPayload>(payload_).s;
            case Kind::Perturbed:
                return std::get<PerturbedPayload>(payload_).base->leibniz_weight();
            case Kind::Blackbox:
                return std::get<BlackboxPayload>(payload_).weight;
            default:
                return 1.0;
        }
    }

    Expr symbolic(const VectorField& x) const {
        require_same_chart(chart_, x.chart);
        switch (kind_) {
            case Kind::Volume:
                return div_volume(std::get<VolumePayload>(payload_).omega, x);
            case Kind::Metric:
                return div_metric(std::get<MetricPayload>(payload_).g, x);
            case Kind::Affine:
                return div_affine(std::get<AffinePayload>(payload_).gamma, x);
            case Kind::SDensity: {
                const auto& p = std::get<SDensityPayload>(payload_);
                return div_sdensity(p.rho, p.s, x);
            }
            case Kind::Perturbed: {
                const auto& p = std::get<PerturbedPayload>(payload_);
                return p.base->symbolic(x) + p.form.pair(x);
            }
            case Kind::Blackbox:
                break;
        }
        throw PreconditionError("black-box operator has no symbolic form");
    }

    double apply(const VectorField& x, std::span<const double> p) const {
        require_same_chart(chart_, x.chart);
        if (kind_ == Kind::Blackbox) return std::get<BlackboxPayload>(payload_).contract(x, p);
        if (kind_ == Kind::Perturbed) {
            const auto& pp = std::get<PerturbedPayload>(payload_);
            if (!pp.base->is_symbolic()) {
                const std::vector<double> e = pp.form.at(p);
                const std::vector<double> xv = x.at(p);
                double pairing = 0.0;
                for (std::size_t i = 0; i < e.size(); ++i) pairing += e[i] * xv[i];
                return pp.base->apply(x, p) + pairing;
            }
        }
        return eval(symbolic(x), p);
    }

    /// Volume form of the `volume`/`metric` kinds, the density of `sdensity`; empty otherwise.
    std::optional<Expr> density() const {
        switch (kind_) {
            case Kind::Volume:
                return std::get<VolumePayload>(payload_).omega.density;
            case Kind::Metric:
                return std::get<MetricPayload>(payload_).g.sqrt_det();
            case Kind::SDensity:
                return std::get<SDensityPayload>(payload_).rho;
            default:
                return std::nullopt;
        }
    }

    /// Base and form of a `perturbed` operator.
    const DivOperator* perturbation_base() const {
        return kind_ == Kind::Perturbed ? std::get<PerturbedPayload>(payload_).base.get() : nullptr;
    }
    const OneForm* perturbation_form() const {
        return kind_ == Kind::Perturbed ? &std::get<PerturbedPayload>(payload_).form : nullptr;
    }

private:
    struct VolumePayload {
        VolumeForm omega;
    };
    struct MetricPayload {
        Metric g;
    };
    struct AffinePayload {
        Connection gamma;
    };
    struct SDensityPayload {
        Expr rho;
        double s;
    };
    struct PerturbedPayload {
        std::shared_ptr<const DivOperator> base;
        OneForm form;
    };
    struct BlackboxPayload {
        Contract contract;
        double weight;
    };
    using Payload =
        std::variant<VolumePayload, MetricPayload, AffinePayload, SDensityPayload, PerturbedPayload, BlackboxPayload>;

    DivOperator(Kind k, ChartRef c, Payload p) : kind_(k), chart_(std::move(c)), payload_(std::move(p)) {}

    Kind kind_;
    ChartRef chart_;
    Payload payload_;
};

inline const char* kind_name(DivOperator::Kind k) {
    switch (k) {
        case DivOperator::Kind::Volume:
            return "volume";
        case DivOperator::Kind::Metric:
            return "metric";
        case DivOperator::Kind::Affine:
            return "affine";
        case DivOperator::Kind::SDensity:
            return "sdensity";
        case DivOperator::Kind::Perturbed:
            return "perturbed";
        case DivOperator::Kind::Blackbox:
            return "blackbox";
    }
    return "?";
}

namespace detail {

// Memoizes the symbolic divergence per field. Entries keep their field alive so the
// node addresses used as keys are never recycled while cached.
class SymbolicCache {
public:
    explicit SymbolicCache(DivOperator op) : op_(std::move(op)) {}

    double operator()(const VectorField& x, std::span<const double> p) {
        return eval(lookup(x), p);
    }

private:
    Expr lookup(const VectorField& x) {
        std::lock_guard<std::mutex> lock(mutex_);
        for (const auto& entry : entries_)
            if (same_nodes(entry.first, x)) return entry.second;
        entries_.emplace_front(x, op_.symbolic(x));
        if (entries_.size() > kCapacity) entries_.pop_back();
        return entries_.front().second;
    }

    static bool same_nodes(const VectorField& a, const VectorField& b) {
        if (a.components.size() != b.components.size() || !same_chart(a.chart, b.chart)) return false;
        for (std::size_t i = 0; i < a.components.size(); ++i)
            if (a.components[i].get() != b.components[i].get()) return false;
        return true;
    }

    static constexpr std::size_t kCapacity = 64;
    DivOperator op_;
    std::mutex mutex_;
    std::deque<std::pair<VectorField, Expr>> entries_;
};

}  // namespace detail

inline DivOperator DivOperator::opaque(const DivOperator& op) {
    if (!op.is_symbolic()) return op;
    auto cache = std::make_shared<detail::SymbolicCache>(op);
    return blackbox(
        op.chart(), [cache](const VectorField& x, std::span<const double> p) { return (*cache)(x, p); },
        op.leibniz_weight());
}

}  // namespace divkit
