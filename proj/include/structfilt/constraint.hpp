#ifndef STRUCTFILT_CONSTRAINT_HPP
#define STRUCTFILT_CONSTRAINT_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "structfilt/orthopoly.hpp"

namespace structfilt
{
    /// How the constraint operator L_x acts on a function.
    enum class OperatorKind
    {
        PointValue,      ///< L_x(u) = u(x)
        PointDerivative, ///< L_x(u) = u'(x)
    };

    enum class Sense
    {
        LowerBound, ///< L_x(u) >= l(x)
        UpperBound, ///< L_x(u) <= l(x)
    };

    /// One family of pointwise linear inequalities L_x(u) vs. l(x) for all x.
    struct ConstraintFamily
    {
        OperatorKind op = OperatorKind::PointValue;
        LegendreSeries bound;
        Sense sense = Sense::LowerBound;
        std::string label;

        static ConstraintFamily positivity();
        static ConstraintFamily lower_bound(double value);
        static ConstraintFamily upper_bound(double value);
        static ConstraintFamily monotone_increasing();
    };

    /// +1 for lower bounds, -1 for upper bounds.
    inline double orientation(Sense sense) { return sense == Sense::LowerBound ? 1.0 : -1.0; }

    struct SignedDistanceSample
    {
        double x = 0.0;
        double value = 0.0;
        std::size_t family_index = 0;
        std::size_t segment_index = 0;
    };

    /// Location and value of the minimum of a polynomial on [-1,1].
    struct Extremum
    {
        double x = 0.0;
        double value = 0.0;
    };

    /// @brief A constraint family restricted to one polynomial piece.
    ///
    /// The family acts on an m-dimensional coordinate vector v through the
    /// action matrix: column j holds the Legendre coefficients (in the piece's
    /// reference coordinate) of L_x applied to coordinate function j. The same
    /// machinery serves the reference element, mapped DG elements, reduced
    /// (equality constrained) coordinates, and globally coupled CG coordinates.
    ///
    /// With gap g(x) = sigma (L_x(u) - l(x)) and q(x) = sum_j (L_x coordinate_j)^2
    /// the signed distance is s = g / sqrt(q); s >= 0 exactly on the feasible side.
    class ConstraintSegment
    {
    public:
        ConstraintSegment(Matrix action, LegendreSeries bound, Sense sense,
                          std::size_t family_index = 0, std::size_t segment_index = 0);

        std::size_t dimension() const { return static_cast<std::size_t>(action_.cols()); }
        const Matrix& action() const { return action_; }
        const LegendreSeries& bound() const { return bound_; }
        Sense sense() const { return sense_; }
        std::size_t family_index() const { return family_; }
        std::size_t segment_index() const { return segment_; }

        /// q(x) = sum_j (L_x coordinate_j)^2 as a series.
        const LegendreSeries& normal_sq() const { return q_; }

        /// Copy with a different bound (used by equality reduction).
        ConstraintSegment with_bound(LegendreSeries bound) const;

        /// L_x(u) as a series.
        LegendreSeries operator_series(const Vector& v) const;

        /// g(x) = sigma (L_x(u) - l(x)).
        LegendreSeries gap(const Vector& v) const;

        /// (L_x coordinate_j)_j at x.
        Vector operator_values(double x) const;

        double signed_distance(const Vector& v, double x) const;

        /// Unit vector h(x) pointing into the feasible halfspace.
        Vector unit_normal(double x) const;

        /// Global minimizer of s over [-1,1] via the critical-point polynomial
        /// 2 g' q - g q'. Returns value -inf when the gap is negative at a point
        /// where the normal vanishes (no coordinate change can repair it).
        SignedDistanceSample minimize(const Vector& v) const;

        /// Exact minimum of the gap g over [-1,1] (endpoints and roots of g').
        Extremum min_gap(const Vector& v) const;

    private:
        std::vector<double> critical_candidates(const LegendreSeries& g, const LegendreSeries& dg) const;

        Matrix action_;
        LegendreSeries bound_;
        Sense sense_;
        std::size_t family_;
        std::size_t segment_;
        LegendreSeries q_;
        LegendreSeries dq_;
        double q_mean_ = 0.0;
    };

    /// Exact minimum of a polynomial on [-1,1], ties resolved to the smaller x.
    Extremum polynomial_minimum(const LegendreSeries& p);

    /// Cheap certified lower bound on a series over [-1,1].
    double series_lower_bound(const LegendreSeries& p);

    /// @brief Segment for a family acting on the n-dimensional orthonormal Legendre basis.
    ///
    /// `value_scale` multiplies every basis function (sqrt(2/h) for mapped DG
    /// elements); `derivative_scale` is the chain-rule factor dxi/dx applied to
    /// derivative operators.
    ConstraintSegment reference_segment(const ConstraintFamily& family, std::size_t n,
                                        std::size_t family_index = 0, double value_scale = 1.0,
                                        double derivative_scale = 1.0);

    double signed_distance(const ConstraintFamily& family, const Vector& coeffs, double x);
    Vector unit_normal(const ConstraintFamily& family, double x, std::size_t n);
    SignedDistanceSample minimize_signed_distance(const ConstraintFamily& family, const Vector& coeffs);
} // namespace structfilt

#endif
