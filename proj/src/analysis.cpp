#include "qmem/analysis.hpp"

#include "qmem/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace qmem::analysis {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// model(x, params, gradient_out) -> value
using Model = std::function<double(double, const Vec&, Eigen::Ref<Vec>)>;

double residuals(std::span<const Point> pts, const Model& f, const Vec& p, Vec& r, Mat& J) {
    Vec grad(p.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        r[row] = pts[i].y - f(pts[i].x, p, grad);
        J.row(row) = grad.transpose();
    }
    return r.squaredNorm();
}

/// Levenberg-Marquardt with Marquardt diagonal scaling.
FitResult levenberg_marquardt(std::span<const Point> pts, const Model& f, Vec p, const Vec& scale) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    const auto k = p.size();
    Vec r(n), r_try(n);
    Mat J(n, k), J_try(n, k);
    double rss = residuals(pts, f, p, r, J);
    double lambda = 1e-3;
    FitResult out;
    for (int it = 1; it <= kMaxIterations; ++it) {
        out.iterations = it;
        const Mat JtJ = J.transpose() * J;
        const Vec g = J.transpose() * r;
        bool accepted = false;
        Vec step;
        for (int tries = 0; tries < 60; ++tries) {
            Mat A = JtJ;
            for (Eigen::Index d = 0; d < k; ++d) A(d, d) += lambda * std::max(JtJ(d, d), 1e-300);
            step = A.ldlt().solve(g);
            const Vec trial = p + step;
            const double rss_try = residuals(pts, f, trial, r_try, J_try);
            if (std::isfinite(rss_try) && rss_try <= rss) {
                p = trial;
                rss = rss_try;
                r.swap(r_try);
                J.swap(J_try);
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        bool small = true;
        for (Eigen::Index d = 0; d < k; ++d) {
            if (std::abs(step[d]) > kFitTolerance * (std::abs(p[d]) + scale[d])) small = false;
        }
        if (small || !accepted || rss == 0.0) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) throw ConvergenceError("fit did not converge within 1000 iterations");

    out.params.assign(p.data(), p.data() + k);
    out.rss = rss;
    out.errors.assign(static_cast<std::size_t>(k), 0.0);
    if (n > k) {
        const double s2 = rss / static_cast<double>(n - k);
        const Mat cov = (J.transpose() * J).completeOrthogonalDecomposition().pseudoInverse() * s2;
        for (Eigen::Index d = 0; d < k; ++d) out.errors[static_cast<std::size_t>(d)] = std::sqrt(std::max(cov(d, d), 0.0));
    }
    return out;
}

void require_points(std::span<const Point> pts, std::size_t min_count) {
    if (pts.size() < min_count) throw DomainError("too few points for the fit");
    for (const auto& q : pts) {
        if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw DomainError("fit points must be finite");
    }
}

/// Distance between the outermost crossings of `level` around index `at`.
double crossing_width(std::span<const Point> pts, std::size_t at, double level, bool below) {
    auto inside = [&](std::size_t i) { return below ? pts[i].y <= level : pts[i].y >= level; };
    std::size_t lo = at, hi = at;
    while (lo > 0 && inside(lo - 1)) --lo;
    while (hi + 1 < pts.size() && inside(hi + 1)) ++hi;
    auto cross = [&](std::size_t a, std::size_t b) {
        const double t = (level - pts[a].y) / (pts[b].y - pts[a].y);
        return pts[a].x + t * (pts[b].x - pts[a].x);
    };
    const double left = lo > 0 ? cross(lo - 1, lo) : pts[lo].x;
    const double right = hi + 1 < pts.size() ? cross(hi, hi + 1) : pts[hi].x;
    return right - left;
}

}  // namespace

double FitResult::operator[](const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return params[i];
    }
    throw DomainError("no fit parameter named " + name);
}

FitResult fit_gaussian_dip(std::span<const Point> input) {
    require_points(input, 4);
    std::vector<Point> pts(input.begin(), input.end());
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    const auto min_it = std::min_element(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.y < b.y; });
    const auto max_it = std::max_element(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.y < b.y; });
    const double span_x = pts.back().x - pts.front().x;
    if (!(span_x > 0.0)) throw DomainError("points must span a range of delays");

    const double depth0 = 1.0 - min_it->y;
    if (max_it->y - min_it->y <= 1e-12 * std::max(1.0, std::abs(max_it->y)) || depth0 <= 0.0) {
        FitResult flat;
        flat.names = {"depth", "fwhm", "center"};
        flat.params = {std::max(depth0, 0.0), 0.0, 0.0};
        flat.errors = {0.0, 0.0, 0.0};
        flat.degenerate = true;
        return flat;
    }
    const auto at = static_cast<std::size_t>(min_it - pts.begin());
    double width0 = crossing_width(pts, at, 1.0 - 0.5 * depth0, true);
    if (!(width0 > 0.0)) width0 = 0.25 * span_x;

    const double c4 = 4.0 * std::log(2.0);
    const Model model = [c4](double x, const Vec& p, Eigen::Ref<Vec> g) {
        const double d = p[0], w = p[1], c = p[2];
        const double u = (x - c) / w;
        const double e = std::exp(-c4 * u * u);
        g[0] = -e;
        g[1] = -d * e * (2.0 * c4 * u * u / w);
        g[2] = -d * e * (2.0 * c4 * u / w);
        return 1.0 - d * e;
    };
    Vec p0(3);
    p0 << depth0, width0, min_it->x;
    Vec scale(3);
    scale << 1.0, span_x, span_x;
    FitResult fit = levenberg_marquardt(pts, model, p0, scale);
    fit.names = {"depth", "fwhm", "center"};
    fit.params[1] = std::abs(fit.params[1]);
    return fit;
}

FitResult fit_half_life(std::span<const Point> input) {
    require_points(input, 3);
    std::vector<Point> pts(input.begin(), input.end());
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    const double span_x = pts.back().x - pts.front().x;
    if (!(span_x > 0.0)) throw DegenerateDataError("storage times have no spread");
    const auto [lo_it, hi_it] = std::minmax_element(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.y < b.y; });
    const double range_y = hi_it->y - lo_it->y;
    if (range_y <= 1e-12 * std::max(1.0, std::abs(hi_it->y))) throw DegenerateDataError("rates are constant");

    const double offset0 = lo_it->y;
    const double first = pts.front().y - offset0;
    double half0 = crossing_width(pts, 0, offset0 + 0.5 * first, false);
    if (!(half0 > 0.0)) half0 = 0.5 * span_x;
    const double amp0 = first * std::exp2(pts.front().x / half0);

    const Model model = [](double x, const Vec& p, Eigen::Ref<Vec> g) {
        const double a = p[0], t = p[1];
        const double e = std::exp2(-x / t);
        g[0] = e;
        g[1] = a * e * std::log(2.0) * x / (t * t);
        g[2] = 1.0;
        return a * e + p[2];
    };
    Vec p0(3);
    p0 << amp0, half0, offset0;
    Vec scale(3);
    scale << range_y, span_x, range_y;
    FitResult fit = levenberg_marquardt(pts, model, p0, scale);
    fit.names = {"amplitude", "half_life_ps", "offset"};
    return fit;
}

double deconvolve_width(double w_a_fs, double w_w_fs) {
    if (!(w_w_fs >= 0.0) || !(w_a_fs >= w_w_fs)) throw DomainError("requires w_a >= w_w >= 0");
    return std::sqrt((w_a_fs - w_w_fs) * (w_a_fs + w_w_fs));
}

std::vector<Point> read_points_csv(std::istream& in) {
    std::vector<Point> pts;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        Point p;
        if (!(fields >> p.x >> p.y)) {
            if (header) {
                header = false;
                continue;
            }
            throw ParseError(line_no, "expected two numeric columns");
        }
        header = false;
        pts.push_back(p);
    }
    return pts;
}

void write_points_csv(std::ostream& out, std::span<const Point> points, const std::string& x_name,
                      const std::string& y_name) {
    out << x_name << ',' << y_name << '\n';
    char buf[96];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", p.x, p.y);
        out << buf;
    }
}

void write_fit_csv(std::ostream& out, const FitResult& fit) {
    out << "name,value,error\n";
    char buf[160];
    for (std::size_t i = 0; i < fit.params.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.12g,%.6g\n", fit.names[i].c_str(), fit.params[i], fit.errors[i]);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "rss,%.6g,\nconverged,%d,\ndegenerate,%d,\n", fit.rss, fit.converged ? 1 : 0,
                  fit.degenerate ? 1 : 0);
    out << buf;
}

}  // namespace qmem::analysis
