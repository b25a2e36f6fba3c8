#include "fatigue/fem.hpp"

#include <algorithm>
#include <cmath>

#include "fatigue/matpoint.hpp"

namespace fatigue {

const std::array<std::array<double, 2>, 4>& gauss_points() {
    static const double g = 1.0 / std::sqrt(3.0);
    static const std::array<std::array<double, 2>, 4> pts{{{-g, -g}, {g, -g}, {g, g}, {-g, g}}};
    return pts;
}

ShapeEval shape_eval(const Mesh& mesh, int e, double xi, double eta) {
    static const double sx[4] = {-1, 1, 1, -1};
    static const double sy[4] = {-1, -1, 1, 1};
    ShapeEval s;
    double dxi[4], deta[4];
    for (int a = 0; a < 4; ++a) {
        s.N[a] = 0.25 * (1 + sx[a] * xi) * (1 + sy[a] * eta);
        dxi[a] = 0.25 * sx[a] * (1 + sy[a] * eta);
        deta[a] = 0.25 * sy[a] * (1 + sx[a] * xi);
    }
    double J[2][2] = {{0, 0}, {0, 0}};
    const auto& c = mesh.elements[e];
    for (int a = 0; a < 4; ++a) {
        const auto& p = mesh.nodes[c[a]];
        J[0][0] += dxi[a] * p[0];
        J[0][1] += dxi[a] * p[1];
        J[1][0] += deta[a] * p[0];
        J[1][1] += deta[a] * p[1];
    }
    s.detJ = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (!(s.detJ > 0.0)) throw InputError("non-positive Jacobian in element " + std::to_string(e + 1));
    const double inv = 1.0 / s.detJ;
    for (int a = 0; a < 4; ++a) {
        s.dN[a][0] = inv * (J[1][1] * dxi[a] - J[0][1] * deta[a]);
        s.dN[a][1] = inv * (-J[1][0] * dxi[a] + J[0][0] * deta[a]);
    }
    return s;
}

Geometry::Geometry(const Mesh& mesh) {
    qp.reserve(4 * static_cast<std::size_t>(mesh.n_elements()));
    for (int e = 0; e < mesh.n_elements(); ++e)
        for (const auto& g : gauss_points()) qp.push_back(shape_eval(mesh, e, g[0], g[1]));
}

Pattern::Pattern(const Mesh& mesh, int k) : dofs_per_node(k) {
    const int n = mesh.n_nodes() * k;
    const int kk = 4 * k;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(mesh.n_elements()) * kk * kk + n);
    auto gdof = [&](const std::array<int, 4>& c, int i) { return c[i / k] * k + i % k; };
    for (const auto& c : mesh.elements)
        for (int i = 0; i < kk; ++i)
            for (int j = 0; j < kk; ++j) trip.emplace_back(gdof(c, i), gdof(c, j), 0.0);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 0.0);
    A.resize(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    const int* outer = A.outerIndexPtr();
    const int* inner = A.innerIndexPtr();
    auto pos = [&](int row, int col) {
        const int* b = inner + outer[col];
        const int* e = inner + outer[col + 1];
        const int* it = std::lower_bound(b, e, row);
        return static_cast<int>(it - inner);
    };
    scatter.resize(static_cast<std::size_t>(mesh.n_elements()) * kk * kk);
    std::size_t idx = 0;
    for (const auto& c : mesh.elements)
        for (int i = 0; i < kk; ++i)
            for (int j = 0; j < kk; ++j) scatter[idx++] = pos(gdof(c, i), gdof(c, j));
    transpose.resize(A.nonZeros());
    for (int col = 0; col < n; ++col)
        for (int p = outer[col]; p < outer[col + 1]; ++p) transpose[p] = pos(col, inner[p]);
    diag.resize(n);
    for (int i = 0; i < n; ++i) diag[i] = pos(i, i);
}

Eigen::VectorXd edge_load(const Mesh& mesh, const std::string& set, int dir) {
    auto it = mesh.edge_sets.find(set);
    if (it == mesh.edge_sets.end()) throw InputError("unknown edge set '" + set + "'");
    Eigen::VectorXd f = Eigen::VectorXd::Zero(2 * mesh.n_nodes());
    const double g = 1.0 / std::sqrt(3.0);
    for (const auto& ed : it->second) {
        const auto& p = mesh.nodes[ed[0]];
        const auto& q = mesh.nodes[ed[1]];
        const double L = std::hypot(q[0] - p[0], q[1] - p[1]);
        for (double s : {-g, g}) {
            const double Na = 0.5 * (1 - s), Nb = 0.5 * (1 + s);
            f[2 * ed[0] + dir] += 0.5 * L * Na;
            f[2 * ed[1] + dir] += 0.5 * L * Nb;
        }
    }
    return f;
}

void apply_constraints(const Pattern& pat, SpMat& A, Eigen::VectorXd& b, const std::vector<char>& fixed,
                       const Eigen::VectorXd& prescribed) {
    const int n = static_cast<int>(A.cols());
    const int* outer = A.outerIndexPtr();
    const int* inner = A.innerIndexPtr();
    double* v = A.valuePtr();
    for (int col = 0; col < n; ++col) {
        if (!fixed[col]) continue;
        const double x = prescribed[col];
        for (int p = outer[col]; p < outer[col + 1]; ++p) {
            const int row = inner[p];
            if (!fixed[row]) b[row] -= v[p] * x;
        }
    }
    for (int col = 0; col < n; ++col) {
        if (!fixed[col]) continue;
        for (int p = outer[col]; p < outer[col + 1]; ++p) {
            v[p] = 0.0;
            v[pat.transpose[p]] = 0.0;
        }
    }
    for (int col = 0; col < n; ++col) {
        if (!fixed[col]) continue;
        v[pat.diag[col]] = 1.0;
        b[col] = prescribed[col];
    }
}

Eigen::VectorXd LinearSolver::solve(const SpMat& A, const Eigen::VectorXd& b) {
    if (kind_ == LinearKind::CG) {
        Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
        cg.setTolerance(1e-14);
        cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * A.rows()));
        cg.compute(A);
        Eigen::VectorXd x = cg.solve(b);
        if (cg.info() != Eigen::Success) throw SolverError("conjugate gradient did not converge");
        return x;
    }
    if (!analyzed_ || analyzed_nnz_ != A.nonZeros()) {
        ldlt_.analyzePattern(A);
        analyzed_ = true;
        analyzed_nnz_ = A.nonZeros();
    }
    ldlt_.factorize(A);
    if (ldlt_.info() != Eigen::Success) throw SolverError("sparse factorization failed (singular system)");
    Eigen::VectorXd x = ldlt_.solve(b);
    if (!x.allFinite()) throw SolverError("sparse solve produced non-finite values (singular system)");
    return x;
}

}  // namespace fatigue
