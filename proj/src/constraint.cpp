#include "structfilt/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "structfilt/error.hpp"

namespace structfilt
{
    namespace
    {
        constexpr double q_floor_rel = 1e-20;   // q below this (relative to its mean) is a vanishing normal
        constexpr double q_direct_rel = 1e-6;   // below this, recompute q from the action directly
        constexpr double degenerate_shift = 1e-6;
        constexpr double vanishing_gap_floor = 64.0 * std::numeric_limits<double>::epsilon();
        constexpr double tie_rel = 1e-14;

        bool better(double s, double x, double best_s, double best_x)
        {
            const double tie = tie_rel * std::max(1.0, std::abs(best_s));
            if (s < best_s - tie)
                return true;
            return std::abs(s - best_s) <= tie && x < best_x;
        }
    } // namespace

    ConstraintFamily ConstraintFamily::positivity() { return lower_bound(0.0); }

    ConstraintFamily ConstraintFamily::lower_bound(double value)
    {
        return {OperatorKind::PointValue, LegendreSeries::constant(value), Sense::LowerBound, "lower_bound"};
    }

    ConstraintFamily ConstraintFamily::upper_bound(double value)
    {
        return {OperatorKind::PointValue, LegendreSeries::constant(value), Sense::UpperBound, "upper_bound"};
    }

    ConstraintFamily ConstraintFamily::monotone_increasing()
    {
        return {OperatorKind::PointDerivative, LegendreSeries::constant(0.0), Sense::LowerBound, "monotone"};
    }

    ConstraintSegment::ConstraintSegment(Matrix action, LegendreSeries bound, Sense sense,
                                         std::size_t family_index, std::size_t segment_index)
        : action_(std::move(action)), bound_(std::move(bound)), sense_(sense), family_(family_index),
          segment_(segment_index)
    {
        const auto rows = static_cast<std::size_t>(action_.rows());
        const std::size_t qdeg = 2 * (rows - 1);
        const QuadratureRule& rule = gauss_legendre(qdeg + 1);
        Vector samples(static_cast<Eigen::Index>(rule.size()));
        for (std::size_t i = 0; i < rule.size(); ++i)
        {
            const Vector psi = basis_values(rule.nodes[i], rows);
            samples[static_cast<Eigen::Index>(i)] = (action_.transpose() * psi).squaredNorm();
        }
        q_ = project_samples(rule, samples, qdeg);
        dq_ = derivative(q_);
        q_mean_ = integrate(q_) / 2.0;
    }

    ConstraintSegment ConstraintSegment::with_bound(LegendreSeries bound) const
    {
        ConstraintSegment copy = *this;
        copy.bound_ = std::move(bound);
        return copy;
    }

    LegendreSeries ConstraintSegment::operator_series(const Vector& v) const
    {
        return LegendreSeries(Vector(action_ * v));
    }

    LegendreSeries ConstraintSegment::gap(const Vector& v) const
    {
        LegendreSeries g = operator_series(v) - bound_;
        g *= orientation(sense_);
        return g;
    }

    Vector ConstraintSegment::operator_values(double x) const
    {
        return action_.transpose() * basis_values(x, static_cast<std::size_t>(action_.rows()));
    }

    double ConstraintSegment::signed_distance(const Vector& v, double x) const
    {
        const Vector b = operator_values(x);
        const double q = b.squaredNorm();
        if (!(q > 0.0))
            throw DegenerateNormal("signed_distance: constraint operator vanishes on every coordinate");
        const double g = orientation(sense_) * (b.dot(v) - eval(bound_, x));
        return g / std::sqrt(q);
    }

    Vector ConstraintSegment::unit_normal(double x) const
    {
        const Vector b = operator_values(x);
        const double norm = b.norm();
        if (!(norm > 0.0))
            throw DegenerateNormal("unit_normal: constraint operator vanishes on every coordinate");
        return (orientation(sense_) / norm) * b;
    }

    std::vector<double> ConstraintSegment::critical_candidates(const LegendreSeries& g, const LegendreSeries& dg) const
    {
        std::vector<double> candidates{-1.0, 1.0};
        const double g_scale = g.coeffs().cwiseAbs().maxCoeff();

        // critical points of g / sqrt(q): 2 g' q - g q' = 0
        if (g_scale > 0.0)
        {
            const std::size_t crit_deg = std::max<std::size_t>(1, g.degree() + q_.degree());
            const QuadratureRule& rule = gauss_legendre(crit_deg + 1);
            Vector samples(static_cast<Eigen::Index>(rule.size()));
            for (std::size_t i = 0; i < rule.size(); ++i)
            {
                const double x = rule.nodes[i];
                samples[static_cast<Eigen::Index>(i)] = 2.0 * eval(dg, x) * eval(q_, x) - eval(g, x) * eval(dq_, x);
            }
            const LegendreSeries crit = project_samples(rule, samples, crit_deg);
            const double crit_scale = crit.coeffs().cwiseAbs().maxCoeff();
            const double ref_scale = g_scale * q_.coeffs().cwiseAbs().maxCoeff();
            if (crit_scale > 1e-14 * ref_scale)
            {
                const auto roots = comrade_roots(crit);
                candidates.insert(candidates.end(), roots.begin(), roots.end());
            }
        }
        std::sort(candidates.begin(), candidates.end());
        return candidates;
    }

    SignedDistanceSample ConstraintSegment::minimize(const Vector& v) const
    {
        if (!(q_mean_ > 0.0))
            throw DegenerateNormal("minimize: constraint operator vanishes identically");

        const LegendreSeries g = gap(v);
        const LegendreSeries dg = derivative(g);
        // roundoff in g follows the data, not g itself (g may cancel to nothing);
        // the absolute floor covers data that is itself at roundoff level of unit-scale fields
        const double g_scale = std::max({g.coeffs().cwiseAbs().maxCoeff(), bound_.coeffs().cwiseAbs().maxCoeff(),
                                         std::sqrt(q_mean_) * v.norm()});
        const double g_tol = std::max(1e-12 * g_scale, vanishing_gap_floor);

        std::vector<double> candidates = critical_candidates(g, dg);

        const double sigma = orientation(sense_);
        const double q_floor = q_floor_rel * q_mean_;
        auto direct_q = [&](double x) { return operator_values(x).squaredNorm(); };

        SignedDistanceSample best{0.0, std::numeric_limits<double>::infinity(), family_, segment_};
        bool found = false;
        auto consider = [&](double x, double q) {
            const double s = eval(g, x) / std::sqrt(q);
            if (!found || better(s, x, best.value, best.x))
            {
                best.x = x;
                best.value = s;
                found = true;
            }
        };

        for (double x : candidates)
        {
            double q = eval(q_, x);
            if (q < q_direct_rel * q_mean_)
                q = direct_q(x);
            if (q > q_floor)
            {
                consider(x, q);
                continue;
            }
            // vanishing normal: the gap at the zero of q cannot be changed by any coordinate.
            // x is only near that zero, so step onto it (Newton on q') before judging g.
            const LegendreSeries d2q = derivative(dq_);
            double x0 = x;
            for (int it = 0; it < 6; ++it)
            {
                const double curvature = eval(d2q, x0);
                if (!(curvature > 0.0))
                    break;
                x0 = std::clamp(x0 - eval(dq_, x0) / curvature, -1.0, 1.0);
            }
            if (direct_q(x0) <= q_floor && eval(g, x0) < -g_tol)
            {
                return {x0, -std::numeric_limits<double>::infinity(), family_, segment_};
            }
            for (double shifted : {x - degenerate_shift, x + degenerate_shift})
            {
                if (shifted < -1.0 || shifted > 1.0)
                    continue;
                const double qs = direct_q(shifted);
                if (qs > q_floor)
                    consider(shifted, qs);
            }
        }
        if (!found)
            throw DegenerateNormal("minimize: normal vanishes at every candidate point");

        // report the winner with the directly computed normal
        const Vector b = operator_values(best.x);
        best.value = sigma * (b.dot(v) - eval(bound_, best.x)) / b.norm();
        return best;
    }

    Extremum ConstraintSegment::min_gap(const Vector& v) const { return polynomial_minimum(gap(v)); }

    Extremum polynomial_minimum(const LegendreSeries& p)
    {
        std::vector<double> candidates{-1.0, 1.0};
        const LegendreSeries dp = derivative(p);
        const double scale = p.coeffs().cwiseAbs().maxCoeff();
        if (dp.coeffs().cwiseAbs().maxCoeff() > 1e-14 * scale)
        {
            const auto roots = comrade_roots(dp);
            candidates.insert(candidates.end(), roots.begin(), roots.end());
        }
        std::sort(candidates.begin(), candidates.end());
        Extremum best{candidates.front(), eval(p, candidates.front())};
        for (double x : candidates)
        {
            const double value = eval(p, x);
            if (value < best.value)
                best = {x, value};
        }
        return best;
    }

    double series_lower_bound(const LegendreSeries& p)
    {
        const Vector& c = p.coeffs();
        double bound = c[0] / std::sqrt(2.0);
        for (Eigen::Index j = 1; j < c.size(); ++j)
            bound -= std::abs(c[j]) * std::sqrt((2.0 * static_cast<double>(j) + 1.0) / 2.0);
        return bound;
    }

    ConstraintSegment reference_segment(const ConstraintFamily& family, std::size_t n, std::size_t family_index,
                                        double value_scale, double derivative_scale)
    {
        const auto ni = static_cast<Eigen::Index>(n);
        Matrix action = (family.op == OperatorKind::PointValue)
                            ? Matrix(value_scale * Matrix::Identity(ni, ni))
                            : Matrix(value_scale * derivative_scale * derivative_matrix(n));
        return ConstraintSegment(std::move(action), family.bound, family.sense, family_index, 0);
    }

    double signed_distance(const ConstraintFamily& family, const Vector& coeffs, double x)
    {
        return reference_segment(family, static_cast<std::size_t>(coeffs.size())).signed_distance(coeffs, x);
    }

    Vector unit_normal(const ConstraintFamily& family, double x, std::size_t n)
    {
        return reference_segment(family, n).unit_normal(x);
    }

    SignedDistanceSample minimize_signed_distance(const ConstraintFamily& family, const Vector& coeffs)
    {
        return reference_segment(family, static_cast<std::size_t>(coeffs.size())).minimize(coeffs);
    }
} // namespace structfilt
