#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rigidpath/errors.hpp"
#include "rigidpath/trajectory.hpp"

namespace rigidpath {

struct GeometryParams {
    int max_frame_gap = 5;        // r: matrices are fit for all pairs with 0 < k-j <= r
    double epsilon_f = 1.5;       // inlier threshold on the point-to-epipolar-line distance, px
    double theta_member = 0.9;    // membership needs strictly more than this positive ratio
    int min_tested_pairs = 3;     // fewer tested pairs -> untestable, never a member
    double max_condition = 1e10;  // design-matrix conditioning guard
    double collinearity_frac = 0.75;
    double collinearity_tol = 1e-6; // px; distance to the best-fit line that counts as "on it"
};

// Fundamental matrix for an ordered frame pair (j,k): rank 2, Frobenius norm 1,
// sign fixed so the entry of largest magnitude is positive. A point p at frame j
// maps to the epipolar line F * p~ at frame k.
struct FundamentalMatrix {
    int frame_j = 0;
    int frame_k = 0;
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
};

namespace detail {

inline void normalize_representation(Eigen::Matrix3d& f) {
    const double norm = f.norm();
    if (norm > 0) f /= norm;
    int r = 0, c = 0;
    f.cwiseAbs().maxCoeff(&r, &c);
    if (f(r, c) < 0) f = -f;
}

// Fraction of points within tol of their total-least-squares line.
inline bool mostly_collinear(std::span<const Vec2> pts, double frac, double tol) {
    const std::size_t n = pts.size();
    double cx = 0, cy = 0;
    for (const Vec2& p : pts) { cx += p.x; cy += p.y; }
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (const Vec2& p : pts) {
        const double dx = p.x - cx, dy = p.y - cy;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    Eigen::Matrix2d cov;
    cov << sxx, sxy, sxy, syy;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Eigen::Vector2d axis = eig.eigenvectors().col(1); // largest eigenvalue
    const double nx = -axis.y(), ny = axis.x();
    std::size_t on_line = 0;
    for (const Vec2& p : pts)
        if (std::abs((p.x - cx) * nx + (p.y - cy) * ny) < tol) ++on_line;
    return static_cast<double>(on_line) > frac * static_cast<double>(n);
}

struct Normalizer {
    double cx = 0, cy = 0, scale = 1;

    static Normalizer fit(std::span<const Vec2> pts) {
        Normalizer t;
        for (const Vec2& p : pts) { t.cx += p.x; t.cy += p.y; }
        const double n = static_cast<double>(pts.size());
        t.cx /= n;
        t.cy /= n;
        double mean_dist = 0;
        for (const Vec2& p : pts) mean_dist += std::hypot(p.x - t.cx, p.y - t.cy);
        mean_dist /= n;
        t.scale = mean_dist > 0 ? std::numbers::sqrt2 / mean_dist : 1.0;
        return t;
    }
    Vec2 apply(const Vec2& p) const { return {(p.x - cx) * scale, (p.y - cy) * scale}; }
    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d t;
        t << scale, 0, -scale * cx, 0, scale, -scale * cy, 0, 0, 1;
        return t;
    }
};

// Normalized 8-point estimate, or nullopt for a degenerate configuration.
inline std::optional<Eigen::Matrix3d> fit_fundamental(std::span<const Vec2> pts_j,
                                                      std::span<const Vec2> pts_k,
                                                      const GeometryParams& params) {
    const std::size_t n = pts_j.size();
    if (n < 8 || pts_k.size() != n) return std::nullopt;
    if (mostly_collinear(pts_j, params.collinearity_frac, params.collinearity_tol) ||
        mostly_collinear(pts_k, params.collinearity_frac, params.collinearity_tol))
        return std::nullopt;

    const Normalizer tj = Normalizer::fit(pts_j);
    const Normalizer tk = Normalizer::fit(pts_k);

    Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 9, 1> row;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = tj.apply(pts_j[i]);
        const Vec2 b = tk.apply(pts_k[i]);
        row << b.x * a.x, b.x * a.y, b.x, b.y * a.x, b.y * a.y, b.y, a.x, a.y, 1.0;
        ata.selfadjointView<Eigen::Lower>().rankUpdate(row);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata);
    if (eig.info() != Eigen::Success) return std::nullopt;
    // lambda = sigma^2 of the design matrix; the smallest belongs to the solution,
    // the second smallest must be well away from zero for the solution to be unique.
    const auto& lambda = eig.eigenvalues();
    const double rel_floor =
        std::max(1.0 / (params.max_condition * params.max_condition), 5e-15);
    if (lambda(1) <= lambda(8) * rel_floor) return std::nullopt;

    Eigen::Matrix3d f;
    const auto v = eig.eigenvectors().col(0);
    f << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = svd.singularValues();
    s(2) = 0.0; // enforce rank 2
    f = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

    f = tk.matrix().transpose() * f * tj.matrix();
    normalize_representation(f);
    if (!f.allFinite()) return std::nullopt;
    return f;
}

} // namespace detail

inline Eigen::Matrix3d estimate_fundamental(std::span<const Vec2> pts_j,
                                            std::span<const Vec2> pts_k,
                                            const GeometryParams& params = {}) {
    if (pts_j.size() < 8 || pts_j.size() != pts_k.size())
        throw std::invalid_argument("estimate_fundamental needs >= 8 correspondences");
    auto f = detail::fit_fundamental(pts_j, pts_k, params);
    if (!f)
        throw degeneracy_error("degenerate configuration for fundamental matrix estimation (" +
                               std::to_string(pts_j.size()) + " matches)");
    return *f;
}

// Point-to-epipolar-line distance d(p_k, F * p_j~) in pixels. One-directional.
// Returns +inf when p_j maps to a degenerate line (p_j is the epipole image).
inline double geometric_error(const Vec2& p_j, const Vec2& p_k, const Eigen::Matrix3d& f) {
    const double l0 = f(0, 0) * p_j.x + f(0, 1) * p_j.y + f(0, 2);
    const double l1 = f(1, 0) * p_j.x + f(1, 1) * p_j.y + f(1, 2);
    const double l2 = f(2, 0) * p_j.x + f(2, 1) * p_j.y + f(2, 2);
    const double denom = std::hypot(l0, l1);
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(l0 * p_k.x + l1 * p_k.y + l2) / denom;
}

// A rigid-motion hypothesis over one clip: fundamental matrices for the frame
// pairs within the window (gap <= r) plus the tracks labeled as its members.
struct RigidMotion {
    int clip_index = 0;
    FrameWindow window;
    std::vector<FundamentalMatrix> matrices;   // sorted by (frame_j, frame_k)
    std::vector<int> members;                  // track indices, sorted
    std::vector<double> member_mean_error;     // aligned with members; g of Eq-weighting
    std::string origin;                        // "cell:N" / "combo:N+M[+K]" / "global-fallback"
};

struct MembershipStats {
    int tested = 0;
    int positive = 0;
    double error_sum = 0.0;

    double mean_error() const {
        return tested > 0 ? error_sum / tested : std::numeric_limits<double>::infinity();
    }
};

inline MembershipStats membership_stats(const Trajectory& traj,
                                        std::span<const FundamentalMatrix> matrices,
                                        const GeometryParams& params) {
    MembershipStats stats;
    for (const FundamentalMatrix& fm : matrices) {
        if (!traj.visible_at(fm.frame_j) || !traj.visible_at(fm.frame_k)) continue;
        const double err = geometric_error(traj.at_frame(fm.frame_j), traj.at_frame(fm.frame_k), fm.m);
        ++stats.tested;
        if (err < params.epsilon_f) ++stats.positive;
        stats.error_sum += err;
    }
    return stats;
}

inline bool is_positive_majority(const MembershipStats& s, const GeometryParams& params) {
    return s.tested >= params.min_tested_pairs &&
           static_cast<double>(s.positive) > params.theta_member * static_cast<double>(s.tested);
}

inline bool is_member(const Trajectory& traj, const RigidMotion& motion,
                      const GeometryParams& params) {
    return is_positive_majority(membership_stats(traj, motion.matrices, params), params);
}

// Enumerate the frame pairs a motion model covers: (j,k) in window, 0 < k-j <= r.
template <typename Fn>
void for_each_frame_pair(const FrameWindow& window, int max_gap, Fn&& fn) {
    for (int j = window.first; j < window.last; ++j)
        for (int k = j + 1; k <= std::min(window.last, j + max_gap); ++k) fn(j, k);
}

} // namespace rigidpath
