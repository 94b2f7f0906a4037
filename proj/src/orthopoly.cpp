#include "structfilt/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "structfilt/error.hpp"

namespace structfilt
{
    namespace
    {
        // x psi_j = a_{j+1} psi_{j+1} + a_j psi_{j-1}
        inline double recurrence_coeff(std::size_t j)
        {
            if (j == 0)
                return 0.0;
            const double jd = static_cast<double>(j);
            return jd / std::sqrt(4.0 * jd * jd - 1.0);
        }

        inline double normalization(std::size_t j)
        {
            return std::sqrt((2.0 * static_cast<double>(j) + 1.0) / 2.0);
        }

        // Parlett-Reinsch balancing, in place.
        void balance(Matrix& a)
        {
            constexpr double radix = 2.0;
            const Eigen::Index n = a.rows();
            bool done = false;
            while (!done)
            {
                done = true;
                for (Eigen::Index i = 0; i < n; ++i)
                {
                    double c = 0.0, r = 0.0;
                    for (Eigen::Index j = 0; j < n; ++j)
                    {
                        if (j == i)
                            continue;
                        c += std::abs(a(j, i));
                        r += std::abs(a(i, j));
                    }
                    if (c == 0.0 || r == 0.0)
                        continue;
                    const double s = c + r;
                    double f = 1.0;
                    double g = r / radix;
                    while (c < g)
                    {
                        f *= radix;
                        c *= radix * radix;
                    }
                    g = r * radix;
                    while (c > g)
                    {
                        f /= radix;
                        c /= radix * radix;
                    }
                    if ((c + r) / f < 0.95 * s)
                    {
                        done = false;
                        a.row(i) /= f;
                        a.col(i) *= f;
                    }
                }
            }
        }
    } // namespace

    LegendreSeries::LegendreSeries(Vector coeffs) : c_(std::move(coeffs))
    {
        if (c_.size() == 0)
            c_ = Vector::Zero(1);
    }

    LegendreSeries::LegendreSeries(std::initializer_list<double> coeffs)
        : c_(static_cast<Eigen::Index>(coeffs.size()))
    {
        Eigen::Index i = 0;
        for (double v : coeffs)
            c_[i++] = v;
        if (c_.size() == 0)
            c_ = Vector::Zero(1);
    }

    LegendreSeries LegendreSeries::constant(double value)
    {
        return LegendreSeries{value * std::numbers::sqrt2};
    }

    double LegendreSeries::operator()(double x) const { return eval(*this, x); }

    LegendreSeries& LegendreSeries::operator+=(const LegendreSeries& other)
    {
        if (other.c_.size() > c_.size())
            c_.conservativeResizeLike(Vector::Zero(other.c_.size()));
        c_.head(other.c_.size()) += other.c_;
        return *this;
    }

    LegendreSeries& LegendreSeries::operator-=(const LegendreSeries& other)
    {
        if (other.c_.size() > c_.size())
            c_.conservativeResizeLike(Vector::Zero(other.c_.size()));
        c_.head(other.c_.size()) -= other.c_;
        return *this;
    }

    LegendreSeries& LegendreSeries::operator*=(double alpha)
    {
        c_ *= alpha;
        return *this;
    }

    LegendreSeries operator+(LegendreSeries a, const LegendreSeries& b) { return a += b; }
    LegendreSeries operator-(LegendreSeries a, const LegendreSeries& b) { return a -= b; }
    LegendreSeries operator*(double alpha, LegendreSeries a) { return a *= alpha; }

    const QuadratureRule& gauss_legendre(std::size_t m)
    {
        static std::mutex mutex;
        static std::map<std::size_t, std::unique_ptr<QuadratureRule>> cache;

        std::lock_guard lock(mutex);
        auto& slot = cache[m];
        if (slot)
            return *slot;

        auto rule = std::make_unique<QuadratureRule>();
        rule->nodes.resize(m);
        rule->weights.resize(m);
        const double md = static_cast<double>(m);
        for (std::size_t i = 0; i < (m + 1) / 2; ++i)
        {
            // Tricomi initial guess, then Newton on P_m.
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (md + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it)
            {
                double p0 = 1.0, p1 = x;
                for (std::size_t k = 2; k <= m; ++k)
                {
                    const double kd = static_cast<double>(k);
                    const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                    p0 = p1;
                    p1 = p2;
                }
                dp = md * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x)))
                    break;
            }
            // recompute derivative at the converged node
            {
                double p0 = 1.0, p1 = x;
                for (std::size_t k = 2; k <= m; ++k)
                {
                    const double kd = static_cast<double>(k);
                    const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                    p0 = p1;
                    p1 = p2;
                }
                dp = (m == 1) ? 1.0 : md * (x * p1 - p0) / (x * x - 1.0);
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule->nodes[i] = -x;
            rule->nodes[m - 1 - i] = x;
            rule->weights[i] = w;
            rule->weights[m - 1 - i] = w;
        }
        if (m % 2 == 1)
            rule->nodes[m / 2] = 0.0;
        slot = std::move(rule);
        return *slot;
    }

    double basis_value(std::size_t j, double x)
    {
        double prev = 0.0;
        double cur = 1.0 / std::numbers::sqrt2;
        for (std::size_t k = 0; k < j; ++k)
        {
            const double next = (x * cur - recurrence_coeff(k) * prev) / recurrence_coeff(k + 1);
            prev = cur;
            cur = next;
        }
        return cur;
    }

    Vector basis_values(double x, std::size_t n)
    {
        Vector v(static_cast<Eigen::Index>(n));
        if (n == 0)
            return v;
        v[0] = 1.0 / std::numbers::sqrt2;
        if (n > 1)
            v[1] = x * v[0] / recurrence_coeff(1);
        for (std::size_t j = 1; j + 1 < n; ++j)
        {
            const auto i = static_cast<Eigen::Index>(j);
            v[i + 1] = (x * v[i] - recurrence_coeff(j) * v[i - 1]) / recurrence_coeff(j + 1);
        }
        return v;
    }

    Vector basis_derivatives(double x, std::size_t n)
    {
        Vector d = Vector::Zero(static_cast<Eigen::Index>(n));
        if (n < 2)
            return d;
        const Vector v = basis_values(x, n);
        d[1] = v[0] / recurrence_coeff(1);
        for (std::size_t j = 1; j + 1 < n; ++j)
        {
            const auto i = static_cast<Eigen::Index>(j);
            d[i + 1] = (v[i] + x * d[i] - recurrence_coeff(j) * d[i - 1]) / recurrence_coeff(j + 1);
        }
        return d;
    }

    Matrix vandermonde(const std::vector<double>& nodes, std::size_t n)
    {
        Matrix V(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < nodes.size(); ++i)
            V.row(static_cast<Eigen::Index>(i)) = basis_values(nodes[i], n).transpose();
        return V;
    }

    double eval(const LegendreSeries& series, double x)
    {
        const Vector& c = series.coeffs();
        const std::size_t n = series.size();
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = n; k-- > 0;)
        {
            const double alpha = x / recurrence_coeff(k + 1);
            const double beta_next = -recurrence_coeff(k + 1) / recurrence_coeff(k + 2);
            const double b0 = c[static_cast<Eigen::Index>(k)] + alpha * b1 + beta_next * b2;
            b2 = b1;
            b1 = b0;
        }
        return b1 / std::numbers::sqrt2;
    }

    double eval_derivative(const LegendreSeries& series, double x)
    {
        return eval(derivative(series), x);
    }

    LegendreSeries derivative(const LegendreSeries& series)
    {
        // psi_k' = sum_{j<k, k-j odd} 2 s_j s_k psi_j with s_j = sqrt((2j+1)/2)
        const Vector& c = series.coeffs();
        const auto n = c.size();
        Vector d = Vector::Zero(n);
        double tail_even = 0.0, tail_odd = 0.0; // running sums of s_k c_k by parity of k
        for (Eigen::Index k = n - 1; k >= 1; --k)
        {
            const double term = normalization(static_cast<std::size_t>(k)) * c[k];
            if (k % 2 == 0)
                tail_even += term;
            else
                tail_odd += term;
            const Eigen::Index j = k - 1;
            const double tail = (j % 2 == 0) ? tail_odd : tail_even;
            d[j] = 2.0 * normalization(static_cast<std::size_t>(j)) * tail;
        }
        return LegendreSeries(std::move(d));
    }

    Matrix derivative_matrix(std::size_t n)
    {
        Matrix D = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t k = 1; k < n; ++k)
            for (std::size_t j = k - 1;; j -= 2)
            {
                D(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                    2.0 * normalization(j) * normalization(k);
                if (j < 2)
                    break;
            }
        return D;
    }

    LegendreSeries multiply(const LegendreSeries& a, const LegendreSeries& b)
    {
        const std::size_t deg = a.degree() + b.degree();
        const QuadratureRule& rule = gauss_legendre(deg + 1);
        Vector samples(static_cast<Eigen::Index>(rule.size()));
        for (std::size_t i = 0; i < rule.size(); ++i)
            samples[static_cast<Eigen::Index>(i)] = eval(a, rule.nodes[i]) * eval(b, rule.nodes[i]);
        return project_samples(rule, samples, deg);
    }

    double integrate(const LegendreSeries& series) { return series[0] * std::numbers::sqrt2; }

    LegendreSeries trimmed(const LegendreSeries& series, double rel_tol)
    {
        const Vector& c = series.coeffs();
        const double scale = c.cwiseAbs().maxCoeff();
        Eigen::Index last = c.size() - 1;
        while (last > 0 && std::abs(c[last]) <= rel_tol * scale)
            --last;
        return LegendreSeries(Vector(c.head(last + 1)));
    }

    std::vector<double> comrade_roots(const LegendreSeries& series)
    {
        constexpr double drop_tol = 1e-13;
        constexpr double edge_tol = 1e-10;
        constexpr double imag_tol = 1e-8;

        const double scale = series.coeffs().cwiseAbs().maxCoeff();
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw DegenerateSeries("comrade_roots: series is identically zero");

        const LegendreSeries p = trimmed(series, drop_tol);
        const std::size_t d = p.degree();
        if (d == 0)
            return {};

        const Vector& c = p.coeffs();
        const auto di = static_cast<Eigen::Index>(d);
        Matrix C = Matrix::Zero(di, di);
        for (Eigen::Index j = 0; j + 1 < di; ++j)
        {
            const double a = recurrence_coeff(static_cast<std::size_t>(j + 1));
            C(j, j + 1) = a;
            C(j + 1, j) = a;
        }
        const double lead = recurrence_coeff(d) / c[di];
        for (Eigen::Index k = 0; k < di; ++k)
            C(di - 1, k) -= lead * c[k];

        std::vector<double> roots;
        if (di == 1)
        {
            roots.push_back(C(0, 0));
        }
        else
        {
            balance(C);
            Eigen::EigenSolver<Matrix> solver(C, false);
            const auto& ev = solver.eigenvalues();
            for (Eigen::Index i = 0; i < ev.size(); ++i)
            {
                const double re = ev[i].real();
                if (std::abs(ev[i].imag()) <= imag_tol * (1.0 + std::abs(re)))
                    roots.push_back(re);
            }
        }

        const LegendreSeries dp = derivative(p);
        std::vector<double> out;
        for (double x : roots)
        {
            if (x < -1.0 - 1e-6 || x > 1.0 + 1e-6)
                continue;
            double fx = eval(p, x);
            for (int it = 0; it < 3 && fx != 0.0; ++it)
            {
                const double dfx = eval(dp, x);
                if (dfx == 0.0)
                    break;
                const double step = fx / dfx;
                if (std::abs(step) > 1e-6)
                    break;
                const double trial = x - step;
                const double ft = eval(p, trial);
                if (!(std::abs(ft) < std::abs(fx)))
                    break;
                x = trial;
                fx = ft;
            }
            if (x < -1.0 - edge_tol || x > 1.0 + edge_tol)
                continue;
            out.push_back(std::clamp(x, -1.0, 1.0));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    LegendreSeries project(const std::function<double(double)>& f, std::size_t degree,
                           std::size_t quadrature_points)
    {
        const QuadratureRule& rule = gauss_legendre(quadrature_points ? quadrature_points : degree + 1);
        Vector samples(static_cast<Eigen::Index>(rule.size()));
        for (std::size_t i = 0; i < rule.size(); ++i)
            samples[static_cast<Eigen::Index>(i)] = f(rule.nodes[i]);
        return project_samples(rule, samples, degree);
    }

    LegendreSeries project_samples(const QuadratureRule& rule, const Vector& samples, std::size_t degree)
    {
        const auto n = static_cast<Eigen::Index>(degree + 1);
        Vector c = Vector::Zero(n);
        for (std::size_t i = 0; i < rule.size(); ++i)
        {
            const double wf = rule.weights[i] * samples[static_cast<Eigen::Index>(i)];
            c += wf * basis_values(rule.nodes[i], degree + 1);
        }
        return LegendreSeries(std::move(c));
    }
} // namespace structfilt
