#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ranklens {

// What lookup() does for a term with no stored vector. The binding to model
// kinds lives in the models module.
enum class OovPolicy { ZeroVector, VocabMean, Filter };

std::string to_string(OovPolicy policy);

class EmbeddingTable {
  public:
    EmbeddingTable(std::size_t dim, std::map<std::string, std::vector<double>> vectors);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& term) const { return vectors_.count(term) != 0; }

    // In-vocabulary terms return the stored vector. OOV terms return the
    // policy vector, or nullopt under Filter (token dropped downstream).
    std::optional<std::vector<double>> lookup(const std::string& term, OovPolicy policy) const;

    const std::vector<double>& mean_vector() const { return mean_; }
    const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }

  private:
    std::size_t dim_;
    std::map<std::string, std::vector<double>> vectors_;
    std::vector<double> mean_;
};

// Plain-text format: `term v1 v2 ... v_dim` per line. Throws config_error
// naming the line on a dimension mismatch.
EmbeddingTable load_embeddings(std::istream& source, std::size_t dim);
EmbeddingTable load_embeddings_file(const std::string& path, std::size_t dim);

// Seeded unit-normalized pseudo-random embeddings for the given vocabulary.
// Per-term vectors depend only on (seed, term), not on vocabulary order.
EmbeddingTable generate_embeddings(const std::vector<std::string>& vocabulary, std::size_t dim,
                                   std::uint64_t seed);

// Standard cosine; by convention 0 when either vector is all zeros, so
// zero-vector OOV tokens land in the dissimilar region of every histogram.
double cosine_sim(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ranklens
