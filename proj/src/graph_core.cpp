#include "bstree/graph_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace bstree {

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

std::string edge_string(const Edge& e) {
  std::ostringstream os;
  os << "(" << e.j + 1 << "," << e.k + 1 << ")";
  return os.str();
}

}  // namespace

SpanningTree SpanningTree::from_edges(int p, std::vector<Edge> edges) {
  if (p < 1) throw InvalidTreeError("spanning tree needs at least one node");
  if (static_cast<int>(edges.size()) != p - 1) {
    std::ostringstream os;
    os << "spanning tree on " << p << " nodes needs " << p - 1 << " edges, got "
       << edges.size();
    throw InvalidTreeError(os.str());
  }
  std::vector<int> parent(static_cast<std::size_t>(p));
  std::iota(parent.begin(), parent.end(), 0);
  std::set<Edge> seen;
  for (auto& e : edges) {
    e = Edge(e.j, e.k);
    if (e.j < 0 || e.k >= p) throw InvalidTreeError("edge " + edge_string(e) + " out of range");
    if (e.j == e.k) throw InvalidTreeError("self-loop at node " + std::to_string(e.j + 1));
    if (!seen.insert(e).second) throw InvalidTreeError("duplicate edge " + edge_string(e));
    const int a = find_root(parent, e.j);
    const int b = find_root(parent, e.k);
    // p-1 edges without a cycle always connect p nodes.
    if (a == b) throw InvalidTreeError("edge " + edge_string(e) + " closes a cycle");
    parent[a] = b;
  }
  return SpanningTree(p, std::move(edges));
}

Eigen::MatrixXi SpanningTree::adjacency() const {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(p_, p_);
  for (const auto& e : edges_) {
    a(e.j, e.k) = 1;
    a(e.k, e.j) = 1;
  }
  return a;
}

std::vector<int> SpanningTree::degrees() const {
  std::vector<int> d(static_cast<std::size_t>(p_), 0);
  for (const auto& e : edges_) {
    ++d[e.j];
    ++d[e.k];
  }
  return d;
}

bool SpanningTree::contains(const Edge& e) const {
  const Edge c(e.j, e.k);
  return std::find(edges_.begin(), edges_.end(), c) != edges_.end();
}

std::vector<Edge> SpanningTree::sorted_edges() const {
  auto out = edges_;
  std::sort(out.begin(), out.end());
  return out;
}

bool SpanningTree::same_edges(const SpanningTree& other) const {
  return p_ == other.p_ && sorted_edges() == other.sorted_edges();
}

SpanningTree SpanningTree::relabeled(const std::vector<int>& perm) const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.emplace_back(perm.at(e.j), perm.at(e.k));
  return from_edges(p_, std::move(out));
}

IncidenceMatrix::IncidenceMatrix(const SpanningTree& tree)
    : p_(tree.node_count()), edges_(tree.edges()) {
  if (p_ < 2) throw InvalidTreeError("incidence matrix needs at least two nodes");
  b_ = Eigen::MatrixXd::Zero(p_, p_ - 1);
  for (int s = 0; s < p_ - 1; ++s) {
    b_(edges_[s].j, s) = 1.0;
    b_(edges_[s].k, s) = -1.0;
  }
  refresh();
}

void IncidenceMatrix::refresh() {
  const Eigen::MatrixXd gram = b_.transpose() * b_;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw InvalidTreeError("incidence matrix is rank deficient; edge set is not a tree");
  }
  gram_inv_ = llt.solve(Eigen::MatrixXd::Identity(p_ - 1, p_ - 1));
  swaps_since_refresh_ = 0;
  ++refresh_count_;
}

// Entries of B^T x for x = e_j - e_k (j<k), with the entry for column s zeroed.
Eigen::VectorXd IncidenceMatrix::gram_column_without(int s, const Edge& col) const {
  Eigen::VectorXd c(p_ - 1);
  for (int a = 0; a < p_ - 1; ++a) {
    const Edge& e = edges_[a];
    double v = 0.0;
    if (e.j == col.j) v += 1.0;
    if (e.j == col.k) v -= 1.0;
    if (e.k == col.j) v -= 1.0;
    if (e.k == col.k) v += 1.0;
    c[a] = v;
  }
  c[s] = 0.0;
  return c;
}

// (B_{-s}^T B_{-s})^{-1} v_{-s} = M11 v - M12 (M12^T v) / M22, evaluated in the
// full index space. The entry at s comes out as zero.
Eigen::VectorXd IncidenceMatrix::apply_reduced_inverse(int s, const Eigen::VectorXd& v) const {
  const double m22 = gram_inv_(s, s);
  if (!(m22 > 0.0) || !std::isfinite(m22)) {
    throw NumericalDriftError("non-positive diagonal in cached Gram inverse");
  }
  const auto m12 = gram_inv_.col(s);
  Eigen::VectorXd x = gram_inv_ * v;
  x.noalias() -= m12 * (m12.dot(v) / m22);
  x[s] = 0.0;
  return x;
}

Eigen::VectorXd IncidenceMatrix::multiply_b(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p_);
  for (int a = 0; a < p_ - 1; ++a) {
    out[edges_[a].j] += x[a];
    out[edges_[a].k] -= x[a];
  }
  return out;
}

Eigen::VectorXd IncidenceMatrix::projected_column(int s) const {
  if (s < 0 || s >= p_ - 1) throw std::out_of_range("edge index out of range");
  const Edge& e = edges_[s];
  const Eigen::VectorXd x = apply_reduced_inverse(s, gram_column_without(s, e));
  Eigen::VectorXd beta = -multiply_b(x);
  beta[e.j] += 1.0;
  beta[e.k] -= 1.0;
  return beta;
}

Eigen::MatrixXd IncidenceMatrix::reduced_gram_inverse(int s) const {
  if (s < 0 || s >= p_ - 1) throw std::out_of_range("edge index out of range");
  const double m22 = gram_inv_(s, s);
  if (!(m22 > 0.0)) throw NumericalDriftError("non-positive diagonal in cached Gram inverse");
  const int r = p_ - 2;
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(r));
  for (int a = 0; a < p_ - 1; ++a) {
    if (a != s) keep.push_back(a);
  }
  Eigen::MatrixXd out(r, r);
  for (int a = 0; a < r; ++a) {
    const double ma = gram_inv_(keep[a], s);
    for (int b = 0; b < r; ++b) {
      out(a, b) = gram_inv_(keep[a], keep[b]) - ma * gram_inv_(keep[b], s) / m22;
    }
  }
  return out;
}

CutPartition IncidenceMatrix::cut_partition(int s) const {
  const Eigen::VectorXd beta = projected_column(s);
  const Edge& e = edges_[s];
  const double bj = beta[e.j];
  const double bk = beta[e.k];
  const double gap = std::abs(bj - bk);
  if (!(gap > 1e-12)) throw NumericalDriftError("projected column collapsed to one value");

  CutPartition cut;
  cut.cut_edge = e;
  cut.in_first.assign(static_cast<std::size_t>(p_), 0);
  double worst = 0.0;
  for (int l = 0; l < p_; ++l) {
    const double dj = std::abs(beta[l] - bj);
    const double dk = std::abs(beta[l] - bk);
    if (dj < dk) {
      cut.in_first[l] = 1;
      cut.first.push_back(l);
      worst = std::max(worst, dj);
    } else {
      cut.second.push_back(l);
      worst = std::max(worst, dk);
    }
  }
  if (worst > 0.25 * gap) {
    throw NumericalDriftError("projected column has more than two value clusters");
  }
  return cut;
}

void IncidenceMatrix::swap_edge(int s, Edge replacement) {
  if (s < 0 || s >= p_ - 1) throw std::out_of_range("edge index out of range");
  const Edge r(replacement.j, replacement.k);
  if (r.j < 0 || r.k >= p_ || r.j == r.k) {
    throw InvalidTreeError("replacement edge " + edge_string(r) + " is invalid");
  }
  if (r == edges_[s]) return;

  const Eigen::VectorXd c = gram_column_without(s, r);
  const Eigen::VectorXd u = apply_reduced_inverse(s, c);
  // r^T P_s r: zero when r lies inside one side of the cut, at least 4/p otherwise.
  const double schur = 2.0 - c.dot(u);
  if (!(schur > 1.0 / p_)) {
    throw InvalidTreeError("replacement edge " + edge_string(r) +
                           " does not reconnect the cut of edge " + edge_string(edges_[s]));
  }
  const double m22_new = 1.0 / schur;

  const Eigen::VectorXd m12 = gram_inv_.col(s);
  const double m22 = m12[s];
  gram_inv_.noalias() -= m12 * (m12.transpose() / m22);
  gram_inv_.noalias() += (m22_new * u) * u.transpose();
  gram_inv_.col(s) = -m22_new * u;
  gram_inv_.row(s) = gram_inv_.col(s).transpose();
  gram_inv_(s, s) = m22_new;

  b_.col(s).setZero();
  b_(r.j, s) = 1.0;
  b_(r.k, s) = -1.0;
  edges_[s] = r;

  if (++swaps_since_refresh_ >= p_) refresh();
}

IncidenceMatrix build_incidence(const SpanningTree& tree) { return IncidenceMatrix(tree); }

CutPartition cut_partition(const IncidenceMatrix& b, int s) { return b.cut_partition(s); }

Eigen::MatrixXd extract_reduced_gram_inverse(const IncidenceMatrix& b, int s) {
  return b.reduced_gram_inverse(s);
}

IncidenceMatrix swap_edge_update(IncidenceMatrix b, int s, Edge replacement) {
  b.swap_edge(s, replacement);
  return b;
}

Eigen::MatrixXd weighted_laplacian(const SpanningTree& tree, const Eigen::VectorXd& edge_weights) {
  const int p = tree.node_count();
  if (edge_weights.size() != p - 1) throw std::invalid_argument("one weight per edge required");
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(p, p);
  for (int s = 0; s < p - 1; ++s) {
    const Edge& e = tree.edge(s);
    adj(e.j, e.k) = edge_weights[s];
    adj(e.k, e.j) = edge_weights[s];
  }
  Eigen::MatrixXd lap = -adj;
  lap.diagonal() = adj.rowwise().sum();
  return lap;
}

}  // namespace bstree
