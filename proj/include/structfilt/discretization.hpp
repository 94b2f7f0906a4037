#ifndef STRUCTFILT_DISCRETIZATION_HPP
#define STRUCTFILT_DISCRETIZATION_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "structfilt/constraint.hpp"
#include "structfilt/filter.hpp"

namespace structfilt
{
    using ScalarFunction = std::function<double(double)>;

    /// Partition of [a,b] into E elements.
    class Mesh1D
    {
    public:
        /// Throws std::invalid_argument unless breaks are strictly increasing with at least two entries.
        explicit Mesh1D(std::vector<double> breaks);
        static Mesh1D uniform(double a, double b, std::size_t elements);

        std::size_t elements() const { return breaks_.size() - 1; }
        double a() const { return breaks_.front(); }
        double b() const { return breaks_.back(); }
        const std::vector<double>& breaks() const { return breaks_; }
        double left(std::size_t e) const { return breaks_[e]; }
        double right(std::size_t e) const { return breaks_[e + 1]; }
        /// Exact common width for uniform meshes, breaks difference otherwise.
        double width(std::size_t e) const { return uniform_ ? h_ : breaks_[e + 1] - breaks_[e]; }
        bool is_uniform() const { return uniform_; }

        double to_reference(std::size_t e, double x) const;
        double to_physical(std::size_t e, double xi) const;
        /// Element containing x; points on a break belong to the element on the right (the last element owns b).
        std::size_t locate(double x) const;

    private:
        std::vector<double> breaks_;
        bool uniform_ = false;
        double h_ = 0.0;
    };

    /// @brief Piecewise polynomial in the element-local mapped orthonormal basis.
    ///
    /// Block e holds the coefficients of psi_{e,k}(x) = sqrt(2/h_e) psi_k(xi(x)),
    /// k < n, so the global L2 norm is the Euclidean norm of all coefficients.
    class DGField
    {
    public:
        DGField(Mesh1D mesh, std::size_t n);
        DGField(Mesh1D mesh, std::size_t n, Vector coeffs);

        const Mesh1D& mesh() const { return mesh_; }
        std::size_t local_dimension() const { return n_; }
        std::size_t elements() const { return mesh_.elements(); }

        Vector& coeffs() { return coeffs_; }
        const Vector& coeffs() const { return coeffs_; }
        auto block(std::size_t e) { return coeffs_.segment(static_cast<Eigen::Index>(e * n_), static_cast<Eigen::Index>(n_)); }
        auto block(std::size_t e) const
        {
            return coeffs_.segment(static_cast<Eigen::Index>(e * n_), static_cast<Eigen::Index>(n_));
        }

        /// The field on element e as a series in the reference coordinate.
        LegendreSeries reference_series(std::size_t e) const;

        double operator()(double x) const;
        double derivative(double x) const;

    private:
        Mesh1D mesh_;
        std::size_t n_;
        Vector coeffs_;
    };

    /// @brief Continuous piecewise polynomial space of one degree on a mesh.
    ///
    /// Basis: vertex hats plus integrated-Legendre bubbles
    /// (P_k - P_{k-2}) / sqrt(2(2k-1)), k = 2..p. Element e owns global indices
    /// e*p (left vertex), e*p+1 .. e*p+p-1 (bubbles) and e*p+p (right vertex).
    /// The mass matrix M = R^T R is factored once; w = R v are orthonormal
    /// coordinates.
    class CGSpace
    {
    public:
        /// Throws NotSPD when the assembled mass matrix is not positive definite.
        CGSpace(Mesh1D mesh, std::size_t degree);

        const Mesh1D& mesh() const { return mesh_; }
        std::size_t degree() const { return p_; }
        std::size_t dimension() const { return mesh_.elements() * p_ + 1; }
        std::size_t global_index(std::size_t e, std::size_t local) const;

        /// Legendre coefficients (rows, reference coordinate) of the p+1 local
        /// basis functions (columns, order: left hat, bubbles, right hat).
        const Matrix& local_basis() const { return local_basis_; }
        const Eigen::SparseMatrix<double>& mass() const { return mass_; }
        const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
        /// Upper triangular R with M = R^T R.
        const Matrix& cholesky_factor() const { return R_; }
        const Matrix& inverse_cholesky_factor() const { return Rinv_; }
        /// Integrals of the basis functions.
        const Vector& basis_integrals() const { return integrals_; }

        /// Coefficients of element e's local basis functions in global order (p+1 indices).
        std::vector<std::size_t> element_dofs(std::size_t e) const;

    private:
        Mesh1D mesh_;
        std::size_t p_;
        Matrix local_basis_;
        Eigen::SparseMatrix<double> mass_;
        Eigen::SparseMatrix<double> stiffness_;
        Matrix R_;
        Matrix Rinv_;
        Vector integrals_;
    };

    class CGField
    {
    public:
        explicit CGField(std::shared_ptr<const CGSpace> space);
        CGField(std::shared_ptr<const CGSpace> space, Vector coeffs);

        const CGSpace& space() const { return *space_; }
        const std::shared_ptr<const CGSpace>& space_ptr() const { return space_; }
        Vector& coeffs() { return coeffs_; }
        const Vector& coeffs() const { return coeffs_; }

        LegendreSeries reference_series(std::size_t e) const;
        double operator()(double x) const;

    private:
        std::shared_ptr<const CGSpace> space_;
        Vector coeffs_;
    };

    DGField project_function(const ScalarFunction& f, const Mesh1D& mesh, std::size_t n,
                             std::size_t quadrature_points = 0);
    CGField project_function(const ScalarFunction& f, const std::shared_ptr<const CGSpace>& space,
                             std::size_t quadrature_points = 0);

    std::pair<double, double> element_boundary_values(const DGField& field, std::size_t e);
    double element_mass(const DGField& field, std::size_t e);
    double total_mass(const DGField& field);
    double total_mass(const CGField& field);

    Vector to_orthonormal(const CGField& field);
    CGField from_orthonormal(const std::shared_ptr<const CGSpace>& space, const Vector& w);

    /// L2 norm of field - f with `points` Gauss nodes per element (0 picks max(2 degree + 2, 20)).
    double l2_error(const DGField& field, const std::function<double(double)>& f, std::size_t points = 0);
    double l2_error(const CGField& field, const std::function<double(double)>& f, std::size_t points = 0);

    /// Family bound (a series over the whole domain's reference coordinate) seen from element e.
    LegendreSeries restrict_to_element(const LegendreSeries& bound, const Mesh1D& mesh, std::size_t e);

    /// Constraint piece of `family` on element e acting on the element's n DG coefficients.
    ConstraintSegment element_segment(const ConstraintFamily& family, const Mesh1D& mesh, std::size_t e,
                                      std::size_t n, std::size_t family_index = 0);

    /// Every family on every element, acting on the concatenated DG coefficient vector.
    ConstraintSystem dg_global_system(const std::vector<ConstraintFamily>& families, const Mesh1D& mesh,
                                      std::size_t n);

    /// Elements where some family is violated: the gap is minimized exactly over
    /// endpoints and the roots of its derivative, and the element is flagged iff
    /// that minimum is negative.
    std::vector<std::size_t> flag_elements(const DGField& field, const std::vector<ConstraintFamily>& families);
    std::vector<std::size_t> flag_elements(const CGField& field, const std::vector<ConstraintFamily>& families);

    enum class InfeasibleElementPolicy
    {
        /// Raise Infeasible when the equalities pin a violating state.
        Throw,
        /// Clamp preserved boundary values into the admissible range; if the
        /// element is still infeasible, drop the boundary equalities (mass kept).
        Relax,
    };

    struct FieldFilterOptions
    {
        bool preserve_boundaries = false;
        bool preserve_element_mass = false;
        bool preserve_total_mass = false;
        InfeasibleElementPolicy policy = InfeasibleElementPolicy::Throw;
        FilterConfig config;
    };

    struct FieldFilterReport
    {
        FilterReport filter;
        std::vector<std::size_t> flagged;
        /// Elements whose boundary targets were clamped or whose boundary equalities were dropped.
        std::size_t clamped_elements = 0;
        std::size_t relaxed_elements = 0;
    };

    /// @brief Per-element DG filter with precomputed reduction data.
    ///
    /// Only flagged elements are projected; the others are left untouched.
    /// Elements of equal width share one reduced problem.
    class DGFilter
    {
    public:
        DGFilter(const Mesh1D& mesh, std::size_t n, std::vector<ConstraintFamily> families,
                 FieldFilterOptions options);

        FieldFilterReport apply(DGField& field) const;

    private:
        struct ElementProblem
        {
            double width;
            ConstraintSystem system;
            std::vector<Vector> boundary_vectors; // left, right
            Vector mass_vector;
            std::vector<std::unique_ptr<EqualityReducedProblem>> reduced; // [0] requested set, [1] mass only
            std::vector<std::pair<Sense, LegendreSeries>> value_bounds;   // PointValue families, restricted
        };

        const ElementProblem& problem_for(std::size_t e) const;
        ElementProblem build(std::size_t e) const;

        Mesh1D mesh_;
        std::size_t n_;
        std::vector<ConstraintFamily> families_;
        FieldFilterOptions options_;
        std::vector<ElementProblem> problems_;
        std::vector<std::size_t> problem_index_;
    };

    /// @brief Global CG filter in orthonormal coordinates w = R v.
    ///
    /// One constraint piece per element and family; an optional total-mass
    /// equality uses q_j = integral of the j-th orthonormal basis function.
    class CGFilter
    {
    public:
        /// Throws std::invalid_argument when boundary or element-mass preservation is requested.
        CGFilter(std::shared_ptr<const CGSpace> space, std::vector<ConstraintFamily> families,
                 FieldFilterOptions options);

        FieldFilterReport apply(CGField& field) const;

    private:
        std::shared_ptr<const CGSpace> space_;
        std::vector<ConstraintFamily> families_;
        FieldFilterOptions options_;
        ConstraintSystem system_;
        std::unique_ptr<EqualityReducedProblem> reduced_;
    };

    FieldFilterReport filter_field(DGField& field, const std::vector<ConstraintFamily>& families,
                                   const FieldFilterOptions& options);
    FieldFilterReport filter_field(CGField& field, const std::vector<ConstraintFamily>& families,
                                   const FieldFilterOptions& options);

    /// Flat text dump: a "breaks" line, then one row per element "e,c_0,...,c_{n-1}".
    void write_field_csv(std::ostream& out, const DGField& field);
    DGField read_field_csv(std::istream& in);
    /// CG dump: breaks, then per element its local coefficients in basis order.
    void write_field_csv(std::ostream& out, const CGField& field);
} // namespace structfilt

#endif
