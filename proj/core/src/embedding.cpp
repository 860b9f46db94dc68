#include "ranklens/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ranklens/errors.hpp"
#include "ranklens/rng.hpp"

namespace ranklens {

std::string to_string(OovPolicy policy) {
    switch (policy) {
        case OovPolicy::ZeroVector: return "zero-vector";
        case OovPolicy::VocabMean: return "vocab-mean";
        case OovPolicy::Filter: return "filter";
    }
    return "?";
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::map<std::string, std::vector<double>> vectors)
    : dim_(dim), vectors_(std::move(vectors)), mean_(dim, 0.0) {
    if (dim_ == 0) throw config_error("embedding dim must be positive");
    for (const auto& [term, v] : vectors_) {
        if (v.size() != dim_) throw config_error("embedding for '" + term + "' has wrong dimension");
        for (std::size_t i = 0; i < dim_; ++i) mean_[i] += v[i];
    }
    if (!vectors_.empty()) {
        for (double& m : mean_) m /= static_cast<double>(vectors_.size());
    }
}

std::optional<std::vector<double>> EmbeddingTable::lookup(const std::string& term, OovPolicy policy) const {
    auto it = vectors_.find(term);
    if (it != vectors_.end()) return it->second;
    switch (policy) {
        case OovPolicy::ZeroVector: return std::vector<double>(dim_, 0.0);
        case OovPolicy::VocabMean: return mean_;
        case OovPolicy::Filter: return std::nullopt;
    }
    return std::nullopt;
}

EmbeddingTable load_embeddings(std::istream& source, std::size_t dim) {
    std::map<std::string, std::vector<double>> vectors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string term;
        ss >> term;
        std::vector<double> v;
        v.reserve(dim);
        double x;
        while (ss >> x) v.push_back(x);
        if (v.size() != dim) {
            throw config_error("embedding line " + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " values, got " + std::to_string(v.size()));
        }
        vectors[term] = std::move(v);
    }
    return EmbeddingTable(dim, std::move(vectors));
}

EmbeddingTable load_embeddings_file(const std::string& path, std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open embedding file: " + path);
    return load_embeddings(in, dim);
}

EmbeddingTable generate_embeddings(const std::vector<std::string>& vocabulary, std::size_t dim,
                                   std::uint64_t seed) {
    std::map<std::string, std::vector<double>> vectors;
    for (const std::string& term : vocabulary) {
        Rng rng(mix_seed(seed, fnv1a64(term)));
        std::vector<double> v(dim);
        double norm_sq = 0.0;
        for (double& x : v) {
            x = rng.next_gaussian();
            norm_sq += x * x;
        }
        double norm = std::sqrt(norm_sq);
        if (norm < 1e-12) {
            v.assign(dim, 0.0);
            v[0] = 1.0;
        } else {
            for (double& x : v) x /= norm;
        }
        vectors[term] = std::move(v);
    }
    return EmbeddingTable(dim, std::move(vectors));
}

double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw config_error("cosine_sim: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

}  // namespace ranklens
