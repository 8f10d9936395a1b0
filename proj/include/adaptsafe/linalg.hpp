#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace adaptsafe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline void symmetrize(Mat& m) { m = 0.5 * (m + m.transpose()).eval(); }

inline bool all_finite(const Mat& m) { return m.allFinite(); }

/// Smallest eigenvalue of a symmetric matrix. The 2x2 case is evaluated in
/// closed form since it sits on the per-step recording path.
inline double lambda_min(const Mat& sym)
{
    if (sym.size() == 0) return 0.0;
    if (sym.rows() == 1) return sym(0, 0);
    if (sym.rows() == 2) {
        const double mean = 0.5 * (sym(0, 0) + sym(1, 1));
        const double half_diff = 0.5 * (sym(0, 0) - sym(1, 1));
        const double off = 0.5 * (sym(0, 1) + sym(1, 0));
        return mean - std::hypot(half_diff, off);
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline double lambda_max(const Mat& sym)
{
    if (sym.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(sym.rows() - 1);
}

} // namespace adaptsafe
