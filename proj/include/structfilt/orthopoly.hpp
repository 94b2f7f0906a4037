#ifndef STRUCTFILT_ORTHOPOLY_HPP
#define STRUCTFILT_ORTHOPOLY_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace structfilt
{
    using Vector = Eigen::VectorXd;
    using Matrix = Eigen::MatrixXd;

    /// @brief Polynomial on [-1,1] in the L2-orthonormal Legendre basis.
    ///
    /// Coefficient j multiplies psi_j(x) = sqrt((2j+1)/2) P_j(x), so the
    /// L2([-1,1]) norm of the represented function equals the Euclidean norm of
    /// the coefficient vector. A default constructed series is the zero
    /// polynomial of degree 0.
    class LegendreSeries
    {
    public:
        LegendreSeries() : c_(Vector::Zero(1)) {}
        explicit LegendreSeries(Vector coeffs);
        LegendreSeries(std::initializer_list<double> coeffs);

        /// Series representing the constant function `value`.
        static LegendreSeries constant(double value);

        const Vector& coeffs() const { return c_; }
        std::size_t size() const { return static_cast<std::size_t>(c_.size()); }
        std::size_t degree() const { return size() - 1; }
        double operator[](std::size_t j) const { return c_[static_cast<Eigen::Index>(j)]; }

        double operator()(double x) const;

        LegendreSeries& operator+=(const LegendreSeries& other);
        LegendreSeries& operator-=(const LegendreSeries& other);
        LegendreSeries& operator*=(double alpha);

    private:
        Vector c_;
    };

    LegendreSeries operator+(LegendreSeries a, const LegendreSeries& b);
    LegendreSeries operator-(LegendreSeries a, const LegendreSeries& b);
    LegendreSeries operator*(double alpha, LegendreSeries a);

    /// Gauss-Legendre rule on [-1,1]; m nodes integrate degree 2m-1 exactly.
    struct QuadratureRule
    {
        std::vector<double> nodes;
        std::vector<double> weights;

        std::size_t size() const { return nodes.size(); }
    };

    /// Gauss-Legendre rule with m nodes, ascending. Rules are cached, the
    /// returned reference stays valid for the lifetime of the program.
    const QuadratureRule& gauss_legendre(std::size_t m);

    /// psi_j(x).
    double basis_value(std::size_t j, double x);

    /// (psi_0(x), ..., psi_{n-1}(x)) by forward recurrence.
    Vector basis_values(double x, std::size_t n);

    /// (psi_0'(x), ..., psi_{n-1}'(x)).
    Vector basis_derivatives(double x, std::size_t n);

    /// Matrix V with V(i,j) = psi_j(nodes[i]).
    Matrix vandermonde(const std::vector<double>& nodes, std::size_t n);

    /// Clenshaw evaluation of the series at x.
    double eval(const LegendreSeries& series, double x);

    double eval_derivative(const LegendreSeries& series, double x);

    /// Coefficients of the derivative polynomial (same length, last entry 0).
    LegendreSeries derivative(const LegendreSeries& series);

    /// Matrix D with derivative(c).coeffs() == D * c for length-n coefficient vectors.
    Matrix derivative_matrix(std::size_t n);

    /// Exact product, formed by quadrature re-projection.
    LegendreSeries multiply(const LegendreSeries& a, const LegendreSeries& b);

    /// Integral over [-1,1]; only psi_0 contributes.
    double integrate(const LegendreSeries& series);

    /// Drops trailing coefficients with |c| <= rel_tol * max|c|.
    LegendreSeries trimmed(const LegendreSeries& series, double rel_tol = 1e-13);

    /// @brief Real roots in [-1,1] from the spectrum of the comrade matrix.
    ///
    /// Trailing coefficients below 1e-13 max|c| are dropped first. Eigenvalues
    /// with |Im| <= 1e-8 (1 + |Re|) count as real; those within 1e-10 of the
    /// interval are clipped into it. Roots are polished by Newton steps and
    /// returned in ascending order. A nonzero constant has no roots.
    ///
    /// Throws DegenerateSeries when every coefficient is numerically zero.
    std::vector<double> comrade_roots(const LegendreSeries& series);

    /// L2 projection of f onto polynomials of the given degree using an
    /// m-point Gauss rule (m defaults to degree + 1, exact for polynomials).
    LegendreSeries project(const std::function<double(double)>& f, std::size_t degree,
                           std::size_t quadrature_points = 0);

    /// Re-projects values sampled at the nodes of `rule` onto degree `degree`.
    LegendreSeries project_samples(const QuadratureRule& rule, const Vector& samples,
                                   std::size_t degree);
} // namespace structfilt

#endif
