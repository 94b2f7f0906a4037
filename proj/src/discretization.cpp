#include "structfilt/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "structfilt/error.hpp"

namespace structfilt
{
    namespace
    {
        Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

        std::size_t default_points(std::size_t points, std::size_t degree)
        {
            return points > 0 ? points : std::max<std::size_t>(2 * degree + 2, 20);
        }

        bool constant_bounds(const std::vector<ConstraintFamily>& families)
        {
            return std::all_of(families.begin(), families.end(),
                               [](const ConstraintFamily& f) { return trimmed(f.bound).degree() == 0; });
        }

        /// Action of a family on element-local coordinates whose reference
        /// Legendre coefficients are the columns of `basis`.
        Matrix family_action(const ConstraintFamily& family, const Matrix& basis, double h)
        {
            if (family.op == OperatorKind::PointValue)
                return basis;
            return (2.0 / h) * derivative_matrix(static_cast<std::size_t>(basis.rows())) * basis;
        }

        /// Gap series of a family for a field whose element series is `u` (reference coordinate).
        LegendreSeries element_gap(const ConstraintFamily& family, const LegendreSeries& u, const Mesh1D& mesh,
                                   std::size_t e)
        {
            LegendreSeries lu = u;
            if (family.op == OperatorKind::PointDerivative)
                lu = (2.0 / mesh.width(e)) * derivative(u);
            LegendreSeries g = lu - restrict_to_element(family.bound, mesh, e);
            g *= orientation(family.sense);
            return g;
        }

        template <class SeriesOf>
        std::vector<std::size_t> flag_by_series(const Mesh1D& mesh, const std::vector<ConstraintFamily>& families,
                                                SeriesOf&& series_of)
        {
            std::vector<std::size_t> flagged;
            for (std::size_t e = 0; e < mesh.elements(); ++e)
            {
                const LegendreSeries u = series_of(e);
                for (const auto& family : families)
                {
                    if (polynomial_minimum(element_gap(family, u, mesh, e)).value < 0.0)
                    {
                        flagged.push_back(e);
                        break;
                    }
                }
            }
            return flagged;
        }

        std::string element_context(std::size_t e, const std::exception& err)
        {
            return "element " + std::to_string(e) + ": " + err.what();
        }
    } // namespace

    // ---------------------------------------------------------------- mesh

    Mesh1D::Mesh1D(std::vector<double> breaks) : breaks_(std::move(breaks))
    {
        if (breaks_.size() < 2)
            throw std::invalid_argument("Mesh1D: need at least two breakpoints");
        for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
        {
            if (!(breaks_[i + 1] > breaks_[i]))
                throw std::invalid_argument("Mesh1D: breakpoints must be strictly increasing");
        }
    }

    Mesh1D Mesh1D::uniform(double a, double b, std::size_t elements)
    {
        if (elements == 0)
            throw std::invalid_argument("Mesh1D::uniform: need at least one element");
        if (!(b > a))
            throw std::invalid_argument("Mesh1D::uniform: empty interval");
        std::vector<double> breaks(elements + 1);
        const double h = (b - a) / static_cast<double>(elements);
        for (std::size_t i = 0; i <= elements; ++i)
            breaks[i] = a + h * static_cast<double>(i);
        breaks.back() = b;
        Mesh1D mesh(std::move(breaks));
        mesh.uniform_ = true;
        mesh.h_ = h;
        return mesh;
    }

    double Mesh1D::to_reference(std::size_t e, double x) const
    {
        return (2.0 * x - (left(e) + right(e))) / width(e);
    }

    double Mesh1D::to_physical(std::size_t e, double xi) const
    {
        return 0.5 * (left(e) + right(e)) + 0.5 * width(e) * xi;
    }

    std::size_t Mesh1D::locate(double x) const
    {
        if (x <= a())
            return 0;
        if (x >= b())
            return elements() - 1;
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
        return std::min(static_cast<std::size_t>(it - breaks_.begin()) - 1, elements() - 1);
    }

    // ---------------------------------------------------------------- DG field

    DGField::DGField(Mesh1D mesh, std::size_t n) : DGField(std::move(mesh), n, Vector())
    {
    }

    DGField::DGField(Mesh1D mesh, std::size_t n, Vector coeffs)
        : mesh_(std::move(mesh)), n_(n), coeffs_(std::move(coeffs))
    {
        if (n_ == 0)
            throw std::invalid_argument("DGField: local dimension must be at least 1");
        const std::size_t total = mesh_.elements() * n_;
        if (coeffs_.size() == 0)
            coeffs_ = Vector::Zero(idx(total));
        if (static_cast<std::size_t>(coeffs_.size()) != total)
            throw std::invalid_argument("DGField: coefficient vector has the wrong length");
    }

    LegendreSeries DGField::reference_series(std::size_t e) const
    {
        return LegendreSeries(Vector(std::sqrt(2.0 / mesh_.width(e)) * block(e)));
    }

    double DGField::operator()(double x) const
    {
        const std::size_t e = mesh_.locate(x);
        return eval(reference_series(e), mesh_.to_reference(e, x));
    }

    double DGField::derivative(double x) const
    {
        const std::size_t e = mesh_.locate(x);
        return (2.0 / mesh_.width(e)) * eval_derivative(reference_series(e), mesh_.to_reference(e, x));
    }

    // ---------------------------------------------------------------- CG space

    CGSpace::CGSpace(Mesh1D mesh, std::size_t degree) : mesh_(std::move(mesh)), p_(degree)
    {
        if (p_ == 0)
            throw std::invalid_argument("CGSpace: degree must be at least 1");
        const std::size_t n = p_ + 1;
        auto s = [](std::size_t k) { return std::sqrt((2.0 * static_cast<double>(k) + 1.0) / 2.0); };

        // P_k = psi_k / s_k
        local_basis_ = Matrix::Zero(idx(n), idx(n));
        local_basis_(0, 0) = 0.5 / s(0);
        local_basis_(1, 0) = -0.5 / s(1);
        local_basis_(0, idx(p_)) = 0.5 / s(0);
        local_basis_(1, idx(p_)) = 0.5 / s(1);
        for (std::size_t k = 2; k <= p_; ++k)
        {
            const double c = 1.0 / std::sqrt(2.0 * (2.0 * static_cast<double>(k) - 1.0));
            local_basis_(idx(k), idx(k - 1)) = c / s(k);
            local_basis_(idx(k - 2), idx(k - 1)) = -c / s(k - 2);
        }

        const Matrix D = derivative_matrix(n);
        const Matrix mass_ref = local_basis_.transpose() * local_basis_;
        const Matrix DB = D * local_basis_;
        const Matrix stiff_ref = DB.transpose() * DB;

        const std::size_t N = dimension();
        std::vector<Eigen::Triplet<double>> mass_t;
        std::vector<Eigen::Triplet<double>> stiff_t;
        integrals_ = Vector::Zero(idx(N));
        for (std::size_t e = 0; e < mesh_.elements(); ++e)
        {
            const double h = mesh_.width(e);
            const auto dofs = element_dofs(e);
            for (std::size_t i = 0; i < n; ++i)
            {
                integrals_[idx(dofs[i])] += 0.5 * h * std::sqrt(2.0) * local_basis_(0, idx(i));
                for (std::size_t j = 0; j < n; ++j)
                {
                    mass_t.emplace_back(idx(dofs[i]), idx(dofs[j]), 0.5 * h * mass_ref(idx(i), idx(j)));
                    stiff_t.emplace_back(idx(dofs[i]), idx(dofs[j]), (2.0 / h) * stiff_ref(idx(i), idx(j)));
                }
            }
        }
        mass_.resize(idx(N), idx(N));
        mass_.setFromTriplets(mass_t.begin(), mass_t.end());
        stiffness_.resize(idx(N), idx(N));
        stiffness_.setFromTriplets(stiff_t.begin(), stiff_t.end());

        const Matrix dense = Matrix(mass_);
        Eigen::LLT<Matrix> llt(dense);
        if (llt.info() != Eigen::Success)
            throw NotSPD("CGSpace: mass matrix is not positive definite");
        R_ = llt.matrixU();
        for (Eigen::Index i = 0; i < R_.rows(); ++i)
        {
            if (!(R_(i, i) > 0.0))
                throw NotSPD("CGSpace: mass matrix is not positive definite");
        }
        Rinv_ = R_.triangularView<Eigen::Upper>().solve(Matrix::Identity(idx(N), idx(N)));
    }

    std::size_t CGSpace::global_index(std::size_t e, std::size_t local) const
    {
        if (e >= mesh_.elements() || local > p_)
            throw std::out_of_range("CGSpace::global_index");
        return e * p_ + local;
    }

    std::vector<std::size_t> CGSpace::element_dofs(std::size_t e) const
    {
        std::vector<std::size_t> dofs(p_ + 1);
        for (std::size_t i = 0; i <= p_; ++i)
            dofs[i] = global_index(e, i);
        return dofs;
    }

    CGField::CGField(std::shared_ptr<const CGSpace> space) : CGField(std::move(space), Vector())
    {
    }

    CGField::CGField(std::shared_ptr<const CGSpace> space, Vector coeffs)
        : space_(std::move(space)), coeffs_(std::move(coeffs))
    {
        if (!space_)
            throw std::invalid_argument("CGField: null space");
        const std::size_t N = space_->dimension();
        if (coeffs_.size() == 0)
            coeffs_ = Vector::Zero(idx(N));
        if (static_cast<std::size_t>(coeffs_.size()) != N)
            throw std::invalid_argument("CGField: coefficient vector has the wrong length");
    }

    LegendreSeries CGField::reference_series(std::size_t e) const
    {
        const std::size_t p = space_->degree();
        Vector local(idx(p + 1));
        for (std::size_t i = 0; i <= p; ++i)
            local[idx(i)] = coeffs_[idx(e * p + i)];
        return LegendreSeries(Vector(space_->local_basis() * local));
    }

    double CGField::operator()(double x) const
    {
        const Mesh1D& mesh = space_->mesh();
        const std::size_t e = mesh.locate(x);
        return eval(reference_series(e), mesh.to_reference(e, x));
    }

    // ---------------------------------------------------------------- projections and norms

    DGField project_function(const ScalarFunction& f, const Mesh1D& mesh, std::size_t n,
                             std::size_t quadrature_points)
    {
        DGField field(mesh, n);
        const std::size_t m = quadrature_points > 0 ? quadrature_points : std::max<std::size_t>(n + 1, 2 * n + 3);
        for (std::size_t e = 0; e < mesh.elements(); ++e)
        {
            const LegendreSeries s = project([&](double xi) { return f(mesh.to_physical(e, xi)); }, n - 1, m);
            field.block(e) = std::sqrt(mesh.width(e) / 2.0) * s.coeffs();
        }
        return field;
    }

    CGField project_function(const ScalarFunction& f, const std::shared_ptr<const CGSpace>& space,
                             std::size_t quadrature_points)
    {
        const Mesh1D& mesh = space->mesh();
        const std::size_t p = space->degree();
        const std::size_t m = quadrature_points > 0 ? quadrature_points : 2 * p + 3;
        const QuadratureRule& rule = gauss_legendre(m);
        Vector load = Vector::Zero(idx(space->dimension()));
        for (std::size_t e = 0; e < mesh.elements(); ++e)
        {
            const double h = mesh.width(e);
            const auto dofs = space->element_dofs(e);
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                const Vector phi = space->local_basis().transpose() * basis_values(rule.nodes[q], p + 1);
                const double weight = 0.5 * h * rule.weights[q] * f(mesh.to_physical(e, rule.nodes[q]));
                for (std::size_t i = 0; i <= p; ++i)
                    load[idx(dofs[i])] += weight * phi[idx(i)];
            }
        }
        // M v = b with M = R^T R
        const Matrix& R = space->cholesky_factor();
        Vector y = R.transpose().triangularView<Eigen::Lower>().solve(load);
        return CGField(space, R.triangularView<Eigen::Upper>().solve(y));
    }

    std::pair<double, double> element_boundary_values(const DGField& field, std::size_t e)
    {
        const LegendreSeries s = field.reference_series(e);
        return {eval(s, -1.0), eval(s, 1.0)};
    }

    double element_mass(const DGField& field, std::size_t e)
    {
        return std::sqrt(field.mesh().width(e)) * field.block(e)[0];
    }

    double total_mass(const DGField& field)
    {
        double sum = 0.0;
        for (std::size_t e = 0; e < field.elements(); ++e)
            sum += element_mass(field, e);
        return sum;
    }

    double total_mass(const CGField& field) { return field.space().basis_integrals().dot(field.coeffs()); }

    Vector to_orthonormal(const CGField& field) { return field.space().cholesky_factor() * field.coeffs(); }

    CGField from_orthonormal(const std::shared_ptr<const CGSpace>& space, const Vector& w)
    {
        return CGField(space, space->cholesky_factor().triangularView<Eigen::Upper>().solve(w));
    }

    namespace
    {
        template <class SeriesOf>
        double l2_error_impl(const Mesh1D& mesh, std::size_t degree, const std::function<double(double)>& f,
                             std::size_t points, SeriesOf&& series_of)
        {
            const QuadratureRule& rule = gauss_legendre(default_points(points, degree));
            double sum = 0.0;
            for (std::size_t e = 0; e < mesh.elements(); ++e)
            {
                const LegendreSeries s = series_of(e);
                double local = 0.0;
                for (std::size_t q = 0; q < rule.size(); ++q)
                {
                    const double d = eval(s, rule.nodes[q]) - f(mesh.to_physical(e, rule.nodes[q]));
                    local += rule.weights[q] * d * d;
                }
                sum += 0.5 * mesh.width(e) * local;
            }
            return std::sqrt(sum);
        }
    } // namespace

    double l2_error(const DGField& field, const std::function<double(double)>& f, std::size_t points)
    {
        return l2_error_impl(field.mesh(), field.local_dimension() - 1, f, points,
                             [&](std::size_t e) { return field.reference_series(e); });
    }

    double l2_error(const CGField& field, const std::function<double(double)>& f, std::size_t points)
    {
        return l2_error_impl(field.space().mesh(), field.space().degree(), f, points,
                             [&](std::size_t e) { return field.reference_series(e); });
    }

    // ---------------------------------------------------------------- constraints on elements

    LegendreSeries restrict_to_element(const LegendreSeries& bound, const Mesh1D& mesh, std::size_t e)
    {
        if (bound.degree() == 0)
            return bound;
        const double width = mesh.b() - mesh.a();
        const double mid = 0.5 * (mesh.a() + mesh.b());
        return project(
            [&](double xi) {
                const double x = mesh.to_physical(e, xi);
                return eval(bound, 2.0 * (x - mid) / width);
            },
            bound.degree());
    }

    ConstraintSegment element_segment(const ConstraintFamily& family, const Mesh1D& mesh, std::size_t e,
                                      std::size_t n, std::size_t family_index)
    {
        const double h = mesh.width(e);
        const Matrix basis = std::sqrt(2.0 / h) * Matrix::Identity(idx(n), idx(n));
        return ConstraintSegment(family_action(family, basis, h), restrict_to_element(family.bound, mesh, e),
                                 family.sense, family_index, e);
    }

    ConstraintSystem dg_global_system(const std::vector<ConstraintFamily>& families, const Mesh1D& mesh,
                                      std::size_t n)
    {
        ConstraintSystem system;
        system.dimension = mesh.elements() * n;
        system.family_count = families.size();
        for (std::size_t k = 0; k < families.size(); ++k)
        {
            for (std::size_t e = 0; e < mesh.elements(); ++e)
            {
                const ConstraintSegment local = element_segment(families[k], mesh, e, n, k);
                Matrix action = Matrix::Zero(idx(n), idx(system.dimension));
                action.middleCols(idx(e * n), idx(n)) = local.action();
                system.segments.emplace_back(std::move(action), local.bound(), local.sense(), k, e);
            }
        }
        return system;
    }

    std::vector<std::size_t> flag_elements(const DGField& field, const std::vector<ConstraintFamily>& families)
    {
        return flag_by_series(field.mesh(), families, [&](std::size_t e) { return field.reference_series(e); });
    }

    std::vector<std::size_t> flag_elements(const CGField& field, const std::vector<ConstraintFamily>& families)
    {
        return flag_by_series(field.space().mesh(), families,
                              [&](std::size_t e) { return field.reference_series(e); });
    }

    // ---------------------------------------------------------------- DG filter

    DGFilter::DGFilter(const Mesh1D& mesh, std::size_t n, std::vector<ConstraintFamily> families,
                       FieldFilterOptions options)
        : mesh_(mesh), n_(n), families_(std::move(families)), options_(options)
    {
        if (families_.empty())
            throw std::invalid_argument("DGFilter: no constraint families");
        if (n_ == 0)
            throw std::invalid_argument("DGFilter: local dimension must be at least 1");
        options_.config.validate();

        const bool share = constant_bounds(families_);
        problem_index_.resize(mesh_.elements());
        for (std::size_t e = 0; e < mesh_.elements(); ++e)
        {
            const double h = mesh_.width(e);
            std::size_t found = problems_.size();
            if (share)
            {
                for (std::size_t i = 0; i < problems_.size(); ++i)
                {
                    if (std::abs(problems_[i].width - h) <= 1e-14 * h)
                    {
                        found = i;
                        break;
                    }
                }
            }
            if (found == problems_.size())
                problems_.push_back(build(e));
            problem_index_[e] = found;
        }
    }

    const DGFilter::ElementProblem& DGFilter::problem_for(std::size_t e) const
    {
        return problems_[problem_index_[e]];
    }

    DGFilter::ElementProblem DGFilter::build(std::size_t e) const
    {
        ElementProblem problem;
        problem.width = mesh_.width(e);
        const double h = problem.width;
        problem.system.dimension = n_;
        problem.system.family_count = families_.size();
        for (std::size_t k = 0; k < families_.size(); ++k)
        {
            problem.system.segments.push_back(element_segment(families_[k], mesh_, e, n_, k));
            if (families_[k].op == OperatorKind::PointValue)
                problem.value_bounds.emplace_back(families_[k].sense,
                                                  restrict_to_element(families_[k].bound, mesh_, e));
        }
        const double scale = std::sqrt(2.0 / h);
        problem.boundary_vectors = {scale * basis_values(-1.0, n_), scale * basis_values(1.0, n_)};
        problem.mass_vector = Vector::Zero(idx(n_));
        problem.mass_vector[0] = std::sqrt(h);

        std::vector<Vector> requested;
        if (options_.preserve_boundaries)
            requested.insert(requested.end(), problem.boundary_vectors.begin(), problem.boundary_vectors.end());
        if (options_.preserve_element_mass)
            requested.push_back(problem.mass_vector);
        problem.reduced.resize(2);
        if (!requested.empty())
            problem.reduced[0] =
                std::make_unique<EqualityReducedProblem>(problem.system, build_equality_set(requested));
        if (options_.preserve_boundaries && options_.preserve_element_mass &&
            options_.policy == InfeasibleElementPolicy::Relax)
            problem.reduced[1] =
                std::make_unique<EqualityReducedProblem>(problem.system, build_equality_set({problem.mass_vector}));
        return problem;
    }

    FieldFilterReport DGFilter::apply(DGField& field) const
    {
        if (field.local_dimension() != n_ || field.elements() != mesh_.elements())
            throw std::invalid_argument("DGFilter::apply: field does not match the filter's discretization");

        FieldFilterReport out;
        out.filter.constraint_activations.assign(families_.size(), 0);
        out.flagged = flag_elements(field, families_);
        const bool relax = options_.policy == InfeasibleElementPolicy::Relax;

        for (std::size_t e : out.flagged)
        {
            const ElementProblem& problem = problem_for(e);
            const Vector c = field.block(e);
            ProjectionResult result;
            try
            {
                if (!problem.reduced[0])
                {
                    result = greedy_project(c, problem.system, options_.config);
                }
                else
                {
                    const EqualityConstraintSet& eq = problem.reduced[0]->equalities();
                    Vector targets = eq.values(c);
                    if (relax && options_.preserve_boundaries)
                    {
                        bool clamped = false;
                        for (const auto& [sense, bound] : problem.value_bounds)
                        {
                            for (int side = 0; side < 2; ++side)
                            {
                                const double limit = eval(bound, side == 0 ? -1.0 : 1.0);
                                double& t = targets[side];
                                const double before = t;
                                t = sense == Sense::LowerBound ? std::max(t, limit) : std::min(t, limit);
                                clamped = clamped || t != before;
                            }
                        }
                        if (clamped)
                            ++out.clamped_elements;
                    }
                    try
                    {
                        result = problem.reduced[0]->solve(c, options_.config, targets);
                    }
                    catch (const Infeasible&)
                    {
                        if (!(relax && options_.preserve_boundaries))
                            throw;
                        ++out.relaxed_elements;
                        result = problem.reduced[1] ? problem.reduced[1]->solve(c, options_.config)
                                                    : greedy_project(c, problem.system, options_.config);
                    }
                }
            }
            catch (const Infeasible& err)
            {
                throw Infeasible(element_context(e, err));
            }
            catch (const NotConverged& err)
            {
                throw NotConverged(element_context(e, err), err.best(), err.report());
            }
            field.block(e) = result.coeffs;
            out.filter.merge(result.report);
        }
        return out;
    }

    // ---------------------------------------------------------------- CG filter

    CGFilter::CGFilter(std::shared_ptr<const CGSpace> space, std::vector<ConstraintFamily> families,
                       FieldFilterOptions options)
        : space_(std::move(space)), families_(std::move(families)), options_(options)
    {
        if (!space_)
            throw std::invalid_argument("CGFilter: null space");
        if (families_.empty())
            throw std::invalid_argument("CGFilter: no constraint families");
        if (options_.preserve_boundaries || options_.preserve_element_mass)
            throw std::invalid_argument("CGFilter: only total mass can be preserved in the continuous space");
        options_.config.validate();

        const Mesh1D& mesh = space_->mesh();
        const std::size_t p = space_->degree();
        const Matrix& Rinv = space_->inverse_cholesky_factor();
        system_.dimension = space_->dimension();
        system_.family_count = families_.size();
        for (std::size_t k = 0; k < families_.size(); ++k)
        {
            for (std::size_t e = 0; e < mesh.elements(); ++e)
            {
                // rows e*p .. e*p+p of R^{-1} map w to the element's local coefficients
                const Matrix local = space_->local_basis() * Rinv.middleRows(idx(e * p), idx(p + 1));
                system_.segments.emplace_back(family_action(families_[k], local, mesh.width(e)),
                                              restrict_to_element(families_[k].bound, mesh, e),
                                              families_[k].sense, k, e);
            }
        }
        if (options_.preserve_total_mass)
        {
            const Vector q = Rinv.transpose() * space_->basis_integrals();
            reduced_ = std::make_unique<EqualityReducedProblem>(system_, build_equality_set({q}));
        }
    }

    FieldFilterReport CGFilter::apply(CGField& field) const
    {
        if (field.space_ptr() != space_ && field.space().dimension() != space_->dimension())
            throw std::invalid_argument("CGFilter::apply: field does not match the filter's space");

        FieldFilterReport out;
        out.filter.constraint_activations.assign(families_.size(), 0);
        out.flagged = flag_elements(field, families_);
        if (out.flagged.empty())
            return out;

        const Vector w = to_orthonormal(field);
        ProjectionResult result =
            reduced_ ? reduced_->solve(w, options_.config) : greedy_project(w, system_, options_.config);
        field.coeffs() = space_->cholesky_factor().triangularView<Eigen::Upper>().solve(result.coeffs);
        out.filter.merge(result.report);
        return out;
    }

    FieldFilterReport filter_field(DGField& field, const std::vector<ConstraintFamily>& families,
                                   const FieldFilterOptions& options)
    {
        return DGFilter(field.mesh(), field.local_dimension(), families, options).apply(field);
    }

    FieldFilterReport filter_field(CGField& field, const std::vector<ConstraintFamily>& families,
                                   const FieldFilterOptions& options)
    {
        return CGFilter(field.space_ptr(), families, options).apply(field);
    }

    // ---------------------------------------------------------------- text I/O

    namespace
    {
        void write_breaks(std::ostream& out, const Mesh1D& mesh)
        {
            out << "breaks";
            for (double x : mesh.breaks())
                out << ',' << x;
            out << '\n';
        }

        std::vector<double> split_numbers(const std::string& line, std::string* head)
        {
            std::vector<double> values;
            std::stringstream ss(line);
            std::string cell;
            bool first = true;
            while (std::getline(ss, cell, ','))
            {
                if (first && head)
                {
                    *head = cell;
                    first = false;
                    continue;
                }
                first = false;
                try
                {
                    values.push_back(std::stod(cell));
                }
                catch (const std::exception&)
                {
                    throw std::invalid_argument("read_field_csv: bad number '" + cell + "'");
                }
            }
            return values;
        }
    } // namespace

    void write_field_csv(std::ostream& out, const DGField& field)
    {
        const auto precision = out.precision(17);
        write_breaks(out, field.mesh());
        for (std::size_t e = 0; e < field.elements(); ++e)
        {
            out << e;
            for (Eigen::Index k = 0; k < idx(field.local_dimension()); ++k)
                out << ',' << field.block(e)[k];
            out << '\n';
        }
        out.precision(precision);
    }

    DGField read_field_csv(std::istream& in)
    {
        std::string line;
        if (!std::getline(in, line))
            throw std::invalid_argument("read_field_csv: empty input");
        std::string head;
        std::vector<double> breaks = split_numbers(line, &head);
        if (head != "breaks")
            throw std::invalid_argument("read_field_csv: first line must start with 'breaks'");
        Mesh1D mesh(std::move(breaks));

        std::vector<std::vector<double>> rows;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            rows.push_back(split_numbers(line, &head));
        }
        if (rows.size() != mesh.elements() || rows.front().empty())
            throw std::invalid_argument("read_field_csv: expected one nonempty row per element");
        const std::size_t n = rows.front().size();
        DGField field(mesh, n);
        for (std::size_t e = 0; e < rows.size(); ++e)
        {
            if (rows[e].size() != n)
                throw std::invalid_argument("read_field_csv: rows differ in length");
            for (std::size_t k = 0; k < n; ++k)
                field.block(e)[idx(k)] = rows[e][k];
        }
        return field;
    }

    void write_field_csv(std::ostream& out, const CGField& field)
    {
        const auto precision = out.precision(17);
        const CGSpace& space = field.space();
        write_breaks(out, space.mesh());
        for (std::size_t e = 0; e < space.mesh().elements(); ++e)
        {
            out << e;
            for (std::size_t i : space.element_dofs(e))
                out << ',' << field.coeffs()[idx(i)];
            out << '\n';
        }
        out.precision(precision);
    }
} // namespace structfilt
