#include "cnc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include "cnc/errors.hpp"
#include "cnc/numeric.hpp"
#include "cnc/rng.hpp"

namespace cnc {

std::vector<std::size_t> ClusterAssignment::members(int c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == c) out.push_back(i);
    return out;
}

std::vector<int> ClusterAssignment::cluster_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(std::max(k, 0)), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

void ClusterAssignment::validate() const {
    if (k < 1) throw ArgumentError("cluster count must be >= 1");
    for (int l : labels)
        if (l < 0 || l >= k) throw ArgumentError("label " + std::to_string(l) + " outside [0, " + std::to_string(k) + ")");
}

ClusterAssignment canonical(ClusterAssignment assignment) {
    std::vector<int> remap(static_cast<std::size_t>(assignment.k), -1);
    int next = 0;
    for (int& l : assignment.labels) {
        auto& slot = remap[static_cast<std::size_t>(l)];
        if (slot < 0) slot = next++;
        l = slot;
    }
    return assignment;
}

// ---------------------------------------------------------------- spectral

namespace {

int projection_rank(const Eigen::MatrixXd& X, int k) {
    if (k < 1 || k > X.cols())
        throw RankError("cannot form " + std::to_string(k) + " clusters from " + std::to_string(X.cols()) + " columns");
    return static_cast<int>(std::min<Eigen::Index>({static_cast<Eigen::Index>(k), X.rows(), X.cols()}));
}

ClusterAssignment from_kmeans(const Eigen::MatrixXd& points, int k, const SpectralOptions& options) {
    KMeansOptions km;
    km.seed = options.seed;
    km.restarts = options.restarts;
    km.max_iters = options.max_iters;
    return canonical({kmeans(points, k, km).labels, k});
}

}  // namespace

Eigen::MatrixXd spectral_embedding(const Eigen::MatrixXd& X, int k) {
    const TruncatedSvd svd = truncated_svd(X, projection_rank(X, k));
    return svd.S.asDiagonal() * svd.V.transpose();
}

Eigen::MatrixXd lowrank_approximant(const Eigen::MatrixXd& X, int k) {
    return truncated_svd(X, projection_rank(X, k)).reconstruct();
}

ClusterAssignment spectral_cluster(const Eigen::MatrixXd& X, int k, const SpectralOptions& options) {
    return from_kmeans(spectral_embedding(X, k), k, options);
}

ClusterAssignment lowrank_cluster(const Eigen::MatrixXd& X, int k, const SpectralOptions& options) {
    return from_kmeans(lowrank_approximant(X, k), k, options);
}

// ---------------------------------------------------------------- KNN graph

std::vector<std::vector<int>> knn_graph(const Eigen::MatrixXd& X, int neighbors) {
    const auto n = static_cast<int>(X.cols());
    if (neighbors < 1 || neighbors >= n)
        throw ArgumentError("neighbour count " + std::to_string(neighbors) + " must be in [1, n) with n=" + std::to_string(n));
    std::vector<std::vector<char>> adjacent(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        std::size_t w = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) dist[w++] = {(X.col(i) - X.col(j)).squaredNorm(), j};
        std::partial_sort(dist.begin(), dist.begin() + neighbors, dist.end());
        for (int r = 0; r < neighbors; ++r) {
            const int j = dist[static_cast<std::size_t>(r)].second;
            adjacent[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
            adjacent[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1;
        }
    }
    std::vector<std::vector<int>> graph(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adjacent[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) graph[static_cast<std::size_t>(i)].push_back(j);
    return graph;
}

namespace {

std::vector<std::vector<int>> connected_components(const std::vector<std::vector<int>>& graph) {
    const std::size_t n = graph.size();
    std::vector<int> seen(n, 0);
    std::vector<std::vector<int>> components;
    for (std::size_t start = 0; start < n; ++start) {
        if (seen[start]) continue;
        std::vector<int> comp;
        std::queue<int> frontier;
        frontier.push(static_cast<int>(start));
        seen[start] = 1;
        while (!frontier.empty()) {
            const int v = frontier.front();
            frontier.pop();
            comp.push_back(v);
            for (int u : graph[static_cast<std::size_t>(v)])
                if (!seen[static_cast<std::size_t>(u)]) {
                    seen[static_cast<std::size_t>(u)] = 1;
                    frontier.push(u);
                }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
    }
    return components;
}

// Largest-remainder apportionment of k clusters over components (each gets 1..size).
std::vector<int> apportion(const std::vector<std::vector<int>>& components, int k, std::size_t n) {
    const std::size_t c = components.size();
    std::vector<int> quota(c);
    std::vector<double> remainder(c);
    int total = 0;
    for (std::size_t i = 0; i < c; ++i) {
        const auto size = static_cast<int>(components[i].size());
        const double exact = static_cast<double>(k) * size / static_cast<double>(n);
        quota[i] = std::clamp(static_cast<int>(std::floor(exact)), 1, size);
        remainder[i] = exact - quota[i];
        total += quota[i];
    }
    while (total < k) {
        std::size_t arg = c;
        for (std::size_t i = 0; i < c; ++i)
            if (quota[i] < static_cast<int>(components[i].size()) && (arg == c || remainder[i] > remainder[arg])) arg = i;
        ++quota[arg];
        remainder[arg] -= 1.0;
        ++total;
    }
    while (total > k) {
        std::size_t arg = c;
        for (std::size_t i = 0; i < c; ++i)
            if (quota[i] > 1 && (arg == c || remainder[i] < remainder[arg])) arg = i;
        --quota[arg];
        remainder[arg] += 1.0;
        --total;
    }
    return quota;
}

// Spectral partition of one connected component into `parts` clusters.
std::vector<int> partition_component(const std::vector<std::vector<int>>& graph, const std::vector<int>& vertices,
                                     int parts, const KnnGraphOptions& options, std::uint64_t seed) {
    const auto size = static_cast<Eigen::Index>(vertices.size());
    std::vector<int> labels(vertices.size(), 0);
    if (parts <= 1) return labels;
    if (parts >= size) {
        std::iota(labels.begin(), labels.end(), 0);
        return labels;
    }
    std::vector<Eigen::Index> local(graph.size(), -1);
    for (Eigen::Index v = 0; v < size; ++v) local[static_cast<std::size_t>(vertices[static_cast<std::size_t>(v)])] = v;
    Eigen::MatrixXd adjacency = Eigen::MatrixXd::Zero(size, size);
    for (Eigen::Index v = 0; v < size; ++v)
        for (int u : graph[static_cast<std::size_t>(vertices[static_cast<std::size_t>(v)])])
            adjacency(v, local[static_cast<std::size_t>(u)]) = 1.0;
    const Eigen::VectorXd inv_sqrt_degree = adjacency.rowwise().sum().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd laplacian = Eigen::MatrixXd::Identity(size, size) -
                                      inv_sqrt_degree.asDiagonal() * adjacency * inv_sqrt_degree.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(laplacian);
    Eigen::MatrixXd embedding = eig.eigenvectors().leftCols(parts);
    for (Eigen::Index v = 0; v < size; ++v) {
        const double norm = embedding.row(v).norm();
        if (norm > 0.0) embedding.row(v) /= norm;
    }
    KMeansOptions km;
    km.seed = seed;
    km.restarts = options.restarts;
    return kmeans(embedding.transpose(), parts, km).labels;
}

void rebalance(const std::vector<std::vector<int>>& graph, std::vector<int>& labels, int k, int cap) {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    const std::size_t n = labels.size();
    for (;;) {
        int source = -1;
        for (int c = 0; c < k; ++c)
            if (sizes[static_cast<std::size_t>(c)] > cap && (source < 0 || sizes[static_cast<std::size_t>(c)] > sizes[static_cast<std::size_t>(source)]))
                source = c;
        if (source < 0) return;

        // Best boundary move: largest gain (edges into target minus edges kept), ties to lower vertex then target.
        int best_vertex = -1, best_target = -1, best_gain = std::numeric_limits<int>::min();
        std::vector<int> links(static_cast<std::size_t>(k));
        for (std::size_t v = 0; v < n; ++v) {
            if (labels[v] != source) continue;
            std::fill(links.begin(), links.end(), 0);
            for (int u : graph[v]) ++links[static_cast<std::size_t>(labels[static_cast<std::size_t>(u)])];
            for (int c = 0; c < k; ++c) {
                if (c == source || links[static_cast<std::size_t>(c)] == 0 || sizes[static_cast<std::size_t>(c)] >= cap) continue;
                const int gain = links[static_cast<std::size_t>(c)] - links[static_cast<std::size_t>(source)];
                if (gain > best_gain) {
                    best_gain = gain;
                    best_vertex = static_cast<int>(v);
                    best_target = c;
                }
            }
        }
        if (best_vertex < 0) {
            // No boundary vertex borders a cluster with room: move the lowest-index vertex to the smallest cluster.
            best_target = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
            for (std::size_t v = 0; v < n; ++v)
                if (labels[v] == source) {
                    best_vertex = static_cast<int>(v);
                    break;
                }
        }
        labels[static_cast<std::size_t>(best_vertex)] = best_target;
        --sizes[static_cast<std::size_t>(source)];
        ++sizes[static_cast<std::size_t>(best_target)];
    }
}

}  // namespace

ClusterAssignment knn_graph_partition(const Eigen::MatrixXd& X, int k, const KnnGraphOptions& options) {
    const auto n = static_cast<std::size_t>(X.cols());
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ClusterCountError("cannot form " + std::to_string(k) + " clusters from " + std::to_string(n) + " columns");
    const auto graph = knn_graph(X, options.neighbors);
    auto components = connected_components(graph);

    std::vector<int> labels(n, 0);
    if (components.size() >= static_cast<std::size_t>(k)) {
        // Merge the two smallest groups until k remain; ties go to the group with the lower first vertex.
        while (components.size() > static_cast<std::size_t>(k)) {
            std::stable_sort(components.begin(), components.end(), [](const auto& a, const auto& b) {
                return a.size() != b.size() ? a.size() < b.size() : a.front() < b.front();
            });
            components[0].insert(components[0].end(), components[1].begin(), components[1].end());
            std::sort(components[0].begin(), components[0].end());
            components.erase(components.begin() + 1);
        }
        std::sort(components.begin(), components.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
        for (std::size_t c = 0; c < components.size(); ++c)
            for (int v : components[c]) labels[static_cast<std::size_t>(v)] = static_cast<int>(c);
    } else {
        const auto quota = apportion(components, k, n);
        const Rng root(options.seed);
        int offset = 0;
        for (std::size_t c = 0; c < components.size(); ++c) {
            const auto local = partition_component(graph, components[c], quota[c], options, root.split(c).next_u64());
            for (std::size_t v = 0; v < local.size(); ++v)
                labels[static_cast<std::size_t>(components[c][v])] = offset + local[v];
            offset += quota[c];
        }
    }
    if (options.balance) {
        const int cap = static_cast<int>(std::ceil(options.balance_factor * static_cast<double>(n) / k - 1e-12));
        rebalance(graph, labels, k, std::max(cap, 1));
    }
    return canonical({std::move(labels), k});
}

ClusterAssignment random_balanced_assignment(std::size_t n, int k, std::uint64_t seed) {
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ClusterCountError("cannot form " + std::to_string(k) + " clusters from " + std::to_string(n) + " series");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    ClusterAssignment out{std::vector<int>(n), k};
    for (std::size_t pos = 0; pos < n; ++pos) out.labels[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    return out;
}

ClusterAssignment singleton_assignment(std::size_t n) {
    ClusterAssignment out{std::vector<int>(n), static_cast<int>(n)};
    std::iota(out.labels.begin(), out.labels.end(), 0);
    return out;
}

// ---------------------------------------------------------------- clustering error

namespace {

Eigen::MatrixXd confusion(const ClusterAssignment& c, const ClusterAssignment& c_ref) {
    if (c.size() != c_ref.size())
        throw ShapeError("assignments have different lengths: " + std::to_string(c.size()) + " vs " + std::to_string(c_ref.size()));
    c.validate();
    c_ref.validate();
    const int k = std::max(c.k, c_ref.k);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < c.size(); ++i) counts(c.labels[i], c_ref.labels[i]) += 1.0;
    return counts;
}

}  // namespace

std::vector<int> hungarian_max_assignment(const Eigen::MatrixXd& weights) {
    if (weights.rows() != weights.cols()) throw ShapeError("assignment matrix must be square");
    const auto n = static_cast<int>(weights.rows());
    const double big = weights.size() ? weights.maxCoeff() : 0.0;
    // Shortest augmenting path with potentials on cost = big - weight (1-indexed).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    auto cost = [&](int i, int j) { return big - weights(i - 1, j - 1); };
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0, j) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

int clustering_error_exhaustive(const ClusterAssignment& c, const ClusterAssignment& c_ref) {
    const Eigen::MatrixXd counts = confusion(c, c_ref);
    const auto k = static_cast<int>(counts.rows());
    std::vector<int> phi(static_cast<std::size_t>(k));
    std::iota(phi.begin(), phi.end(), 0);
    double best = 0.0;
    do {
        double agree = 0.0;
        for (int b = 0; b < k; ++b) agree += counts(phi[static_cast<std::size_t>(b)], b);
        best = std::max(best, agree);
    } while (std::next_permutation(phi.begin(), phi.end()));
    return static_cast<int>(c.size()) - static_cast<int>(std::lround(best));
}

int clustering_error_hungarian(const ClusterAssignment& c, const ClusterAssignment& c_ref) {
    const Eigen::MatrixXd counts = confusion(c, c_ref);
    const auto match = hungarian_max_assignment(counts);
    double agree = 0.0;
    for (std::size_t a = 0; a < match.size(); ++a) agree += counts(static_cast<Eigen::Index>(a), match[a]);
    return static_cast<int>(c.size()) - static_cast<int>(std::lround(agree));
}

int clustering_error(const ClusterAssignment& c, const ClusterAssignment& c_ref) {
    if (std::max(c.k, c_ref.k) <= 8) return clustering_error_exhaustive(c, c_ref);
    return clustering_error_hungarian(c, c_ref);
}

void write_assignment_csv(const ClusterAssignment& assignment, const std::vector<std::string>& series_ids,
                          const std::filesystem::path& path) {
    if (series_ids.size() != assignment.size()) throw ShapeError("series id count does not match assignment");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "series_id,cluster\n";
    for (std::size_t i = 0; i < series_ids.size(); ++i) out << series_ids[i] << ',' << assignment.labels[i] << '\n';
}

}  // namespace cnc
