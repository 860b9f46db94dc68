#include "ranklens/lime.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "ranklens/rng.hpp"

namespace ranklens {

WordUniverse word_universe(const std::vector<std::string>& doc_tokens) {
    WordUniverse u;
    std::map<std::string, std::size_t> seen;
    for (std::size_t j = 0; j < doc_tokens.size(); ++j) {
        auto it = seen.find(doc_tokens[j]);
        if (it == seen.end()) {
            seen.emplace(doc_tokens[j], u.words.size());
            u.words.push_back(doc_tokens[j]);
            u.positions.push_back({j});
        } else {
            u.positions[it->second].push_back(j);
        }
    }
    return u;
}

std::vector<PerturbationSample> perturb(const WordUniverse& universe, std::size_t n,
                                        std::uint64_t seed) {
    if (n == 0) throw config_error("perturb: n must be >= 1");
    std::size_t u = universe.words.size();
    if (u == 0) throw config_error("perturb: document has no unique words");

    std::vector<PerturbationSample> samples;
    samples.reserve(n);
    double sigma = 0.75 * std::sqrt(static_cast<double>(u));
    double sigma_sq = sigma * sigma;

    auto finish = [&](std::vector<std::uint8_t> mask) {
        PerturbationSample s;
        std::size_t kept = 0;
        for (std::uint8_t b : mask) kept += b;
        // Cosine distance to the all-ones mask; an all-zero mask has cosine 0
        // by the shared zero-vector convention, hence distance 1.
        double cos = kept == 0 ? 0.0
                               : static_cast<double>(kept) /
                                     (std::sqrt(static_cast<double>(kept)) * std::sqrt(static_cast<double>(u)));
        double d = 1.0 - cos;
        s.locality_weight = std::exp(-d * d / sigma_sq);
        s.mask = std::move(mask);
        samples.push_back(std::move(s));
    };

    finish(std::vector<std::uint8_t>(u, 1));  // the unperturbed instance, once

    Rng rng(seed);
    while (samples.size() < n) {
        std::size_t drop = rng.next_index(u + 1);  // uniform in {0..U}
        std::vector<std::uint8_t> mask(u, 1);
        for (std::size_t idx : rng.sample_without_replacement(u, drop)) mask[idx] = 0;
        finish(std::move(mask));
    }
    return samples;
}

std::vector<std::string> apply_mask(const std::vector<std::string>& doc_tokens,
                                    const WordUniverse& universe,
                                    const std::vector<std::uint8_t>& mask) {
    std::vector<std::uint8_t> drop_position(doc_tokens.size(), 0);
    for (std::size_t w = 0; w < mask.size(); ++w) {
        if (mask[w]) continue;
        for (std::size_t pos : universe.positions[w]) drop_position[pos] = 1;
    }
    std::vector<std::string> kept;
    kept.reserve(doc_tokens.size());
    for (std::size_t j = 0; j < doc_tokens.size(); ++j) {
        if (!drop_position[j]) kept.push_back(doc_tokens[j]);
    }
    return kept;
}

namespace {

// Solves A x = b by Gaussian elimination with partial pivoting. A is n x n
// row-major and modified in place. Systems here are at most (k_words+1)^2.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (std::abs(a[pivot * n + col]) < 1e-300) {
            throw numeric_error("singular system in surrogate fit");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        double d = a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a[ri * n + c] * x[c];
        x[ri] = acc / a[ri * n + ri];
    }
    return x;
}

struct WlsProblem {
    // Gram matrix and moment vector of the weighted design [1, mask bits],
    // so candidate evaluation during forward selection never rescans samples.
    std::vector<double> gram;    // (U+1)^2
    std::vector<double> moment;  // (U+1)
    double yy = 0.0;             // sum w * y^2
    std::size_t dim = 0;         // U + 1
};

WlsProblem build_problem(const std::vector<PerturbationSample>& samples,
                         const std::vector<std::size_t>& rows, std::size_t u) {
    WlsProblem p;
    p.dim = u + 1;
    p.gram.assign(p.dim * p.dim, 0.0);
    p.moment.assign(p.dim, 0.0);
    std::vector<std::size_t> active;
    for (std::size_t r : rows) {
        const PerturbationSample& s = samples[r];
        double w = s.locality_weight;
        double y = s.model_score;
        active.clear();
        active.push_back(0);
        for (std::size_t f = 0; f < u; ++f) {
            if (s.mask[f]) active.push_back(f + 1);
        }
        for (std::size_t a : active) {
            p.moment[a] += w * y;
            for (std::size_t b : active) p.gram[a * p.dim + b] += w;
        }
        p.yy += w * y * y;
    }
    return p;
}

// Weighted SSE of the WLS fit restricted to `support` (feature 0 is the
// intercept and always present): SSE = yy - beta . moment[support].
struct SupportFit {
    std::vector<double> beta;
    double sse = 0.0;
};

SupportFit fit_support(const WlsProblem& p, const std::vector<std::size_t>& support,
                       double regularization) {
    std::size_t n = support.size();
    std::vector<double> a(n * n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = p.gram[support[i] * p.dim + support[j]];
        // Ridge term on the word features keeps near-collinear masks solvable.
        if (support[i] != 0) a[i * n + i] += regularization;
        b[i] = p.moment[support[i]];
    }
    SupportFit fit;
    fit.beta = solve_dense(std::move(a), b, n);
    double explained = 0.0;
    for (std::size_t i = 0; i < n; ++i) explained += fit.beta[i] * p.moment[support[i]];
    fit.sse = p.yy - explained;
    return fit;
}

double predict(const PerturbationSample& s, const std::vector<std::size_t>& support,
               const std::vector<double>& beta) {
    double y = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] == 0) {
            y += beta[i];
        } else if (s.mask[support[i] - 1]) {
            y += beta[i];
        }
    }
    return y;
}

}  // namespace

LimeExplanation fit_surrogate(const std::vector<PerturbationSample>& samples,
                              const WordUniverse& universe, std::size_t k_words,
                              double regularization, std::uint64_t seed) {
    if (samples.size() < 10) throw config_error("fit_surrogate: need at least 10 samples");
    if (k_words == 0) throw config_error("fit_surrogate: k_words must be >= 1");
    std::size_t u = universe.words.size();
    for (const PerturbationSample& s : samples) {
        if (s.mask.size() != u) throw config_error("fit_surrogate: mask width mismatch");
        if (!std::isfinite(s.model_score)) throw numeric_error("fit_surrogate: non-finite score");
    }
    bool any_different = false;
    for (std::size_t i = 1; i < samples.size() && !any_different; ++i) {
        any_different = samples[i].mask != samples[0].mask;
    }
    if (!any_different) throw config_error("fit_surrogate: degenerate design, all masks identical");

    // Seeded 80/20 split.
    Rng rng(mix_seed(seed, 0x5117));
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        std::size_t j = i + rng.next_index(order.size() - i);
        std::swap(order[i], order[j]);
    }
    std::size_t train_n = (samples.size() * 8 + 9) / 10;
    if (train_n == samples.size()) --train_n;
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_n));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(train_n), order.end());

    WlsProblem p = build_problem(samples, train, u);

    // Greedy forward selection on the training Gram system.
    std::vector<std::size_t> support = {0};
    std::vector<std::uint8_t> in_support(u + 1, 0);
    in_support[0] = 1;
    SupportFit current = fit_support(p, support, regularization);
    std::size_t budget = std::min(k_words, u);
    while (support.size() - 1 < budget) {
        std::size_t best_f = 0;
        double best_sse = current.sse;
        SupportFit best_fit;
        for (std::size_t f = 1; f <= u; ++f) {
            if (in_support[f]) continue;
            auto cand = support;
            cand.push_back(f);
            SupportFit fit;
            try {
                fit = fit_support(p, cand, regularization);
            } catch (const numeric_error&) {
                continue;  // collinear candidate
            }
            if (fit.sse < best_sse - 1e-15) {
                best_sse = fit.sse;
                best_f = f;
                best_fit = std::move(fit);
            }
        }
        if (best_f == 0) break;  // nothing reduces training error further
        support.push_back(best_f);
        in_support[best_f] = 1;
        current = std::move(best_fit);
    }

    LimeExplanation expl;
    expl.k_words = k_words;
    expl.seed = seed;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (support[i] == 0) {
            expl.intercept = current.beta[i];
        } else {
            expl.weights[universe.words[support[i] - 1]] = current.beta[i];
        }
    }
    std::vector<std::pair<std::string, double>> ranked(expl.weights.begin(), expl.weights.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        double ma = std::abs(a.second), mb = std::abs(b.second);
        if (ma != mb) return ma > mb;
        return a.first < b.first;
    });
    for (const auto& [w, v] : ranked) expl.selected_words.push_back(w);

    // Fidelity: MSE plus median-threshold agreement, train and held-out.
    std::vector<double> train_scores;
    train_scores.reserve(train.size());
    for (std::size_t r : train) train_scores.push_back(samples[r].model_score);
    std::nth_element(train_scores.begin(), train_scores.begin() + static_cast<std::ptrdiff_t>(train_scores.size() / 2),
                     train_scores.end());
    double median = train_scores[train_scores.size() / 2];

    auto evaluate = [&](const std::vector<std::size_t>& rows, double& mse, double& acc) {
        double se = 0.0;
        std::size_t agree = 0;
        for (std::size_t r : rows) {
            double pred = predict(samples[r], support, current.beta);
            double truth = samples[r].model_score;
            se += (pred - truth) * (pred - truth);
            bool same_side = (pred >= median) == (truth >= median);
            // A sample sitting numerically on the threshold counts as agreed
            // when the surrogate reproduces the score itself.
            if (!same_side && std::abs(pred - truth) <= 1e-9 * std::max(1.0, std::abs(truth))) {
                same_side = true;
            }
            if (same_side) ++agree;
        }
        mse = rows.empty() ? 0.0 : se / static_cast<double>(rows.size());
        acc = rows.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(rows.size());
    };
    evaluate(train, expl.fidelity.train_mse, expl.fidelity.train_acc);
    evaluate(test, expl.fidelity.test_mse, expl.fidelity.test_acc);
    return expl;
}

std::vector<std::string> lime_top_terms(const LimeExplanation& explanation, std::size_t k) {
    if (k == 0) throw config_error("lime_top_terms: k must be >= 1");
    if (k > explanation.k_words) {
        throw config_error("lime_top_terms: k exceeds the fitted k_words; refit wider");
    }
    std::vector<std::string> words = explanation.selected_words;
    if (words.size() > k) words.resize(k);
    return words;
}

void write_lime_jsonl(std::ostream& out, const LimeRecord& record, const std::string& config_hash) {
    nlohmann::json j;
    j["qid"] = record.query_id;
    j["docid"] = record.doc_id;
    j["model"] = record.model;
    j["weights"] = record.explanation.weights;
    j["intercept"] = record.explanation.intercept;
    j["fidelity"] = {{"train_mse", record.explanation.fidelity.train_mse},
                     {"test_mse", record.explanation.fidelity.test_mse},
                     {"train_acc", record.explanation.fidelity.train_acc},
                     {"test_acc", record.explanation.fidelity.test_acc}};
    j["seed"] = record.explanation.seed;
    j["k_words"] = record.explanation.k_words;
    j["selected"] = record.explanation.selected_words;
    j["config_hash"] = config_hash;
    out << j.dump() << '\n';
}

LimeRecord read_lime_json(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line);
    LimeRecord r;
    r.query_id = j.at("qid").get<std::string>();
    r.doc_id = j.at("docid").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.explanation.weights = j.at("weights").get<std::map<std::string, double>>();
    r.explanation.intercept = j.at("intercept").get<double>();
    r.explanation.fidelity.train_mse = j.at("fidelity").at("train_mse").get<double>();
    r.explanation.fidelity.test_mse = j.at("fidelity").at("test_mse").get<double>();
    r.explanation.fidelity.train_acc = j.at("fidelity").at("train_acc").get<double>();
    r.explanation.fidelity.test_acc = j.at("fidelity").at("test_acc").get<double>();
    r.explanation.seed = j.at("seed").get<std::uint64_t>();
    r.explanation.k_words = j.at("k_words").get<std::size_t>();
    r.explanation.selected_words = j.at("selected").get<std::vector<std::string>>();
    return r;
}

}  // namespace ranklens
