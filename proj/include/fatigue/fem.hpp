#pragma once

#include <array>
#include <exception>
#include <vector>

#include <Eigen/Sparse>

#include "fatigue/mesh.hpp"

namespace fatigue {

using SpMat = Eigen::SparseMatrix<double>;

struct ShapeEval {
    std::array<double, 4> N;
    std::array<std::array<double, 2>, 4> dN;  // physical gradients
    double detJ;
};

// 2x2 Gauss points in reference coordinates (unit weights).
const std::array<std::array<double, 2>, 4>& gauss_points();

// Throws InputError naming the element when detJ <= 0.
ShapeEval shape_eval(const Mesh& mesh, int element, double xi, double eta);

// Shape data at the 4 Gauss points of every element, index 4*e + q.
struct Geometry {
    std::vector<ShapeEval> qp;
    explicit Geometry(const Mesh& mesh);
    Geometry() = default;
};

enum class Exec { Serial, Parallel };

// Symmetric sparsity pattern for k dofs per node with an element scatter map into valuePtr().
struct Pattern {
    int dofs_per_node = 1;
    SpMat A;
    std::vector<int> scatter;    // element-major, (4k)^2 entries per element
    std::vector<int> transpose;  // position of the transposed entry of each stored value
    std::vector<int> diag;       // position of each diagonal entry
    Pattern(const Mesh& mesh, int dofs_per_node);
    Pattern() = default;
};

// Element-loop assembly. local(e, Ke, Re) fills a (4k)^2 row-major block and a 4k vector and returns
// the element energy. Ke is null when only the residual is wanted. Element blocks are computed
// serially or with OpenMP and then scattered in element order, so both paths give identical sums.
template <class Local>
double assemble(const Mesh& mesh, const Pattern& pat, Exec exec, Local&& local, SpMat* K, Eigen::VectorXd* R) {
    const int ne = mesh.n_elements();
    const int k = 4 * pat.dofs_per_node;
    std::vector<double> kbuf(K ? static_cast<std::size_t>(ne) * k * k : 0);
    std::vector<double> rbuf(static_cast<std::size_t>(ne) * k, 0.0);
    std::vector<double> ebuf(ne, 0.0);
    std::exception_ptr err = nullptr;
    auto body = [&](int e) {
        double* ke = K ? &kbuf[static_cast<std::size_t>(e) * k * k] : nullptr;
        ebuf[e] = local(e, ke, &rbuf[static_cast<std::size_t>(e) * k]);
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (int e = 0; e < ne; ++e) {
            try {
                body(e);
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
    } else {
        for (int e = 0; e < ne; ++e) body(e);
    }
    if (err) std::rethrow_exception(err);

    double energy = 0.0;
    if (K) {
        if (K->nonZeros() != pat.A.nonZeros()) *K = pat.A;
        std::fill(K->valuePtr(), K->valuePtr() + K->nonZeros(), 0.0);
        double* v = K->valuePtr();
        for (std::size_t i = 0; i < kbuf.size(); ++i) v[pat.scatter[i]] += kbuf[i];
    }
    if (R) {
        R->setZero(static_cast<Eigen::Index>(mesh.n_nodes()) * pat.dofs_per_node);
        for (int e = 0; e < ne; ++e) {
            const auto& c = mesh.elements[e];
            for (int a = 0; a < 4; ++a)
                for (int d = 0; d < pat.dofs_per_node; ++d)
                    (*R)[c[a] * pat.dofs_per_node + d] += rbuf[static_cast<std::size_t>(e) * k + a * pat.dofs_per_node + d];
        }
    }
    for (int e = 0; e < ne; ++e) energy += ebuf[e];
    return energy;
}

// Edge load vector for a unit traction along component dir (0 = x, 1 = y), 2-point Gauss per edge.
Eigen::VectorXd edge_load(const Mesh& mesh, const std::string& edge_set, int dir);

// Eliminates prescribed increments: rows/columns of fixed dofs become identity and the right-hand side
// receives the coupling terms. A must carry the pattern's structure.
void apply_constraints(const Pattern& pat, SpMat& A, Eigen::VectorXd& b, const std::vector<char>& fixed,
                       const Eigen::VectorXd& prescribed);

enum class LinearKind { Direct, CG };

class LinearSolver {
public:
    explicit LinearSolver(LinearKind kind = LinearKind::Direct) : kind_(kind) {}
    // Throws SolverError on a singular or non-convergent system.
    Eigen::VectorXd solve(const SpMat& A, const Eigen::VectorXd& b);
    LinearKind kind() const { return kind_; }

private:
    LinearKind kind_;
    Eigen::SimplicialLDLT<SpMat> ldlt_;
    bool analyzed_ = false;
    Eigen::Index analyzed_nnz_ = -1;
};

}  // namespace fatigue
