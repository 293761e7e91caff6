#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/io.hpp"
#include "forma/parallel.hpp"
#include "forma/rng.hpp"

namespace forma {

namespace detail {

// n-gram key: token ids packed little-endian into a byte string. Length is
// implied by the string size.
inline std::string pack_ids(const uint32_t* ids, size_t n) {
    std::string key;
    key.resize(n * 4);
    for (size_t i = 0; i < n; ++i) {
        uint32_t v = ids[i];
        key[i * 4 + 0] = char(v & 0xFF);
        key[i * 4 + 1] = char((v >> 8) & 0xFF);
        key[i * 4 + 2] = char((v >> 16) & 0xFF);
        key[i * 4 + 3] = char((v >> 24) & 0xFF);
    }
    return key;
}

inline std::vector<uint32_t> unpack_ids(const std::string& key) {
    std::vector<uint32_t> ids(key.size() / 4);
    for (size_t i = 0; i < ids.size(); ++i) {
        ids[i] = uint32_t(uint8_t(key[i * 4])) | uint32_t(uint8_t(key[i * 4 + 1])) << 8 |
                 uint32_t(uint8_t(key[i * 4 + 2])) << 16 | uint32_t(uint8_t(key[i * 4 + 3])) << 24;
    }
    return ids;
}

}  // namespace detail

// Count-based n-gram model over a fixed restricted vocabulary with
// interpolated additive smoothing:
//
//   p_1(w)   = (c(w) + k) / (c(.) + kV)
//   p_n(w|h) = (c(hw) + kV p_{n-1}(w|tail h)) / (c(h) + kV)
//
// where V counts the closed prediction space (vocabulary + unk + EOS).
// Out-of-vocabulary tokens map to unk and are counted like normal tokens;
// EOS is predicted, begin markers are not. The model is immutable after
// training and safe for concurrent evaluation.
class NGramModel {
public:
    NGramModel() = default;

    int order() const { return order_; }
    double k() const { return k_; }
    uint64_t seed() const { return seed_; }
    const Vocabulary& vocab() const { return vocab_; }
    uint64_t vocab_hash() const { return vocab_.hash(); }

    // Count of an n-gram (token sequence of length <= order). Reserved
    // symbols are resolved through the vocabulary.
    uint64_t count(const std::vector<std::string>& tokens) const {
        if (tokens.empty() || tokens.size() > static_cast<size_t>(order_)) return 0;
        std::vector<uint32_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) {
            if (t == kBosToken) ids.push_back(vocab_.bos_id());
            else if (t == kEosToken) ids.push_back(vocab_.eos_id());
            else ids.push_back(vocab_.id_of(t));
        }
        const auto& level = grams_[tokens.size() - 1];
        auto it = level.find(detail::pack_ids(ids.data(), ids.size()));
        return it == level.end() ? 0 : it->second;
    }

    // p(w | context), w given as a token string ("⟨/s⟩" for EOS), context as
    // the most recent tokens oldest-first. Shorter contexts are padded with
    // begin markers.
    double next_token_probability(const std::vector<std::string>& context,
                                  const std::string& token) const {
        std::vector<uint32_t> ctx(static_cast<size_t>(order_ - 1), vocab_.bos_id());
        size_t take = std::min(context.size(), static_cast<size_t>(order_ - 1));
        for (size_t i = 0; i < take; ++i) {
            const std::string& t = context[context.size() - take + i];
            ctx[ctx.size() - take + i] = t == kBosToken ? vocab_.bos_id() : vocab_.id_of(t);
        }
        uint32_t w = token == kEosToken ? vocab_.eos_id() : vocab_.id_of(token);
        return prob(order_, ctx.data(), w);
    }

    // exp(-(1/N) sum ln p(w_i | history)) over the vocab-mapped sentence
    // plus EOS. An empty sentence is the single EOS prediction, N = 1.
    double sentence_perplexity(std::string_view sentence) const {
        std::vector<uint32_t> ids = map_sentence(sentence);
        const size_t n_pred = ids.size() + 1;
        std::vector<uint32_t> window(static_cast<size_t>(order_ - 1), vocab_.bos_id());
        double log_sum = 0.0;
        for (size_t i = 0; i < n_pred; ++i) {
            uint32_t w = i < ids.size() ? ids[i] : vocab_.eos_id();
            log_sum += std::log(prob(order_, window.data(), w));
            if (order_ > 1) {
                for (size_t j = 0; j + 1 < window.size(); ++j) window[j] = window[j + 1];
                window.back() = w;
            }
        }
        return std::exp(-log_sum / static_cast<double>(n_pred));
    }

    void save(const std::string& path) const {
        std::vector<std::string> lines;
        lines.push_back("forma-ngram 1");
        lines.push_back("order " + std::to_string(order_));
        lines.push_back("k " + fmt_real(k_));
        lines.push_back("seed " + std::to_string(seed_));
        lines.push_back("vocab_hash " + to_hex(vocab_.hash()));
        lines.push_back("vocab " + std::to_string(vocab_.size()));
        for (const auto& t : vocab_.tokens()) lines.push_back(t);
        for (int level = 1; level <= order_; ++level) {
            const auto& grams = grams_[level - 1];
            std::vector<std::pair<std::string, uint64_t>> sorted(grams.begin(), grams.end());
            std::sort(sorted.begin(), sorted.end());
            lines.push_back("counts " + std::to_string(level) + " " + std::to_string(sorted.size()));
            for (const auto& [key, c] : sorted) {
                std::vector<uint32_t> ids = detail::unpack_ids(key);
                std::string line;
                for (size_t i = 0; i < ids.size(); ++i) {
                    if (i) line += ' ';
                    line += vocab_.symbol_name(ids[i]);
                }
                line += '\t';
                line += std::to_string(c);
                lines.push_back(std::move(line));
            }
        }
        write_lines(path, lines);
    }

    static NGramModel load(const std::string& path) {
        std::vector<std::string> lines = read_lines(path);
        size_t at = 0;
        auto next = [&]() -> const std::string& {
            if (at >= lines.size()) throw DataError(path + ": truncated model file");
            return lines[at++];
        };
        auto expect_field = [&](const std::string& line, std::string_view name) {
            if (line.rfind(std::string(name) + " ", 0) != 0)
                throw DataError(path + ": expected '" + std::string(name) + "' header line");
            return line.substr(name.size() + 1);
        };
        if (next() != "forma-ngram 1") throw DataError(path + ": not a forma-ngram v1 model");
        NGramModel m;
        m.order_ = static_cast<int>(parse_int(expect_field(next(), "order"), "order"));
        m.k_ = parse_real(expect_field(next(), "k"), "k");
        m.seed_ = static_cast<uint64_t>(parse_int(expect_field(next(), "seed"), "seed"));
        std::string stored_hash = expect_field(next(), "vocab_hash");
        size_t vocab_n = static_cast<size_t>(parse_int(expect_field(next(), "vocab"), "vocab size"));
        std::vector<std::string> tokens;
        tokens.reserve(vocab_n);
        for (size_t i = 0; i < vocab_n; ++i) tokens.push_back(next());
        m.vocab_ = Vocabulary(std::move(tokens));
        if (to_hex(m.vocab_.hash()) != stored_hash)
            throw DataError(path + ": vocabulary hash mismatch");
        m.grams_.assign(static_cast<size_t>(m.order_), {});
        m.ctx_.assign(static_cast<size_t>(m.order_), {});
        for (int level = 1; level <= m.order_; ++level) {
            std::string header = next();
            std::string want = "counts " + std::to_string(level) + " ";
            if (header.rfind(want, 0) != 0)
                throw DataError(path + ": expected counts header for level " + std::to_string(level));
            size_t n = static_cast<size_t>(parse_int(header.substr(want.size()), "counts size"));
            for (size_t i = 0; i < n; ++i) {
                const std::string& line = next();
                size_t tab = line.rfind('\t');
                if (tab == std::string::npos) throw DataError(path + ": malformed count line");
                uint64_t c = static_cast<uint64_t>(parse_int(line.substr(tab + 1), "count"));
                std::vector<std::string> toks = tokenize(line.substr(0, tab));
                if (toks.size() != static_cast<size_t>(level))
                    throw DataError(path + ": n-gram arity mismatch at level " + std::to_string(level));
                std::vector<uint32_t> ids;
                for (const auto& t : toks) {
                    if (t == kBosToken) ids.push_back(m.vocab_.bos_id());
                    else if (t == kEosToken) ids.push_back(m.vocab_.eos_id());
                    else if (t == kUnkToken) ids.push_back(m.vocab_.unk_id());
                    else ids.push_back(m.vocab_.id_of(t));
                }
                m.add_count(level, ids.data(), c);
            }
        }
        return m;
    }

    friend NGramModel train_lm(const std::vector<std::string>&, Vocabulary, int, double, uint64_t);

private:
    std::vector<uint32_t> map_sentence(std::string_view sentence) const {
        std::vector<uint32_t> ids;
        for (const auto& tok : tokenize(sentence)) ids.push_back(vocab_.id_of(tok));
        return ids;
    }

    void add_count(int level, const uint32_t* ids, uint64_t c) {
        grams_[level - 1][detail::pack_ids(ids, level)] += c;
        ctx_[level - 1][detail::pack_ids(ids, level - 1)] += c;
        if (level == 1) total_ += c;
    }

    double prob(int level, const uint32_t* ctx_tail, uint32_t w) const {
        const double kv = k_ * vocab_.closed_size();
        if (level == 1) {
            auto it = grams_[0].find(detail::pack_ids(&w, 1));
            double c = it == grams_[0].end() ? 0.0 : double(it->second);
            return (c + k_) / (double(total_) + kv);
        }
        // ctx_tail points at the last (level-1) symbols of the history
        const uint32_t* ctx = ctx_tail;
        std::string ctx_key = detail::pack_ids(ctx, level - 1);
        std::string gram_key = ctx_key + detail::pack_ids(&w, 1);
        auto git = grams_[level - 1].find(gram_key);
        double cg = git == grams_[level - 1].end() ? 0.0 : double(git->second);
        auto cit = ctx_[level - 1].find(ctx_key);
        double cc = cit == ctx_[level - 1].end() ? 0.0 : double(cit->second);
        double lower = prob(level - 1, ctx + 1, w);
        return (cg + kv * lower) / (cc + kv);
    }

    int order_ = 0;
    double k_ = 0.1;
    uint64_t seed_ = 0;
    Vocabulary vocab_;
    // level L at index L-1: n-gram counts and their context marginals
    std::vector<std::unordered_map<std::string, uint64_t>> grams_;
    std::vector<std::unordered_map<std::string, uint64_t>> ctx_;
    uint64_t total_ = 0;
};

// Trains on the vocab-mapped sentences. Each sentence is padded with
// order-1 begin markers and one EOS; counts at every level 1..order come
// from the predicted positions, so each context count equals the sum of its
// extensions by construction.
inline NGramModel train_lm(const std::vector<std::string>& sentences, Vocabulary vocab, int order,
                           double k = 0.1, uint64_t seed = 0) {
    if (order < 1) throw UsageError("train_lm: order must be >= 1");
    if (k <= 0) throw UsageError("train_lm: smoothing k must be > 0");
    if (sentences.empty()) throw DataError("train_lm: empty sentence list");
    NGramModel m;
    m.order_ = order;
    m.k_ = k;
    m.seed_ = seed;
    m.vocab_ = std::move(vocab);
    m.grams_.assign(static_cast<size_t>(order), {});
    m.ctx_.assign(static_cast<size_t>(order), {});
    std::vector<uint32_t> ids;
    for (const auto& sentence : sentences) {
        ids.clear();
        for (const auto& tok : tokenize(sentence)) ids.push_back(m.vocab_.id_of(tok));
        const size_t n_pred = ids.size() + 1;
        std::vector<uint32_t> window;  // history + predicted symbol
        for (size_t i = 0; i < n_pred; ++i) {
            uint32_t w = i < ids.size() ? ids[i] : m.vocab_.eos_id();
            for (int level = 1; level <= order; ++level) {
                window.clear();
                for (int back = level - 1; back >= 1; --back) {
                    int64_t pos = static_cast<int64_t>(i) - back;
                    window.push_back(pos < 0 ? m.vocab_.bos_id() : ids[static_cast<size_t>(pos)]);
                }
                window.push_back(w);
                m.add_count(level, window.data(), 1);
            }
        }
    }
    return m;
}

// Trains the general-domain model on a seeded random sample of the pool.
inline NGramModel train_lm_sampled(const std::vector<std::string>& sentences, Vocabulary vocab,
                                   int order, double k, size_t sample_size, uint64_t seed) {
    if (sentences.empty()) throw DataError("train_lm_sampled: empty sentence list");
    if (sample_size >= sentences.size())
        return train_lm(sentences, std::move(vocab), order, k, seed);
    std::vector<size_t> idx = sample_indices(sentences.size(), sample_size, seed);
    std::vector<std::string> sample;
    sample.reserve(idx.size());
    for (size_t i : idx) sample.push_back(sentences[i]);
    return train_lm(sample, std::move(vocab), order, k, seed);
}

struct PerplexityScore {
    int64_t pair_index = 0;
    double pp_in = 0;   // perplexity under the in-domain model
    double pp_gen = 0;  // perplexity under the general model
    double diff = 0;    // pp_in - pp_gen
};

// Ascending diff, ties broken by original index. Stable result regardless
// of how the scores were produced.
inline void rank_by_diff(std::vector<PerplexityScore>& scores) {
    std::sort(scores.begin(), scores.end(), [](const PerplexityScore& a, const PerplexityScore& b) {
        if (a.diff != b.diff) return a.diff < b.diff;
        return a.pair_index < b.pair_index;
    });
}

// Scores every target under both models and sorts by perplexity difference.
// Low diff means in-domain-like. Evaluation is pure per sentence; workers
// write by index, so any thread count yields the identical sequence.
inline std::vector<PerplexityScore> perplexity_difference_rank(
    const std::vector<std::string>& targets, const NGramModel& lm_in, const NGramModel& lm_gen,
    unsigned threads = 1) {
    if (lm_in.order() != lm_gen.order() || lm_in.vocab_hash() != lm_gen.vocab_hash())
        throw UsageError("perplexity_difference_rank: models must share vocabulary and order");
    std::vector<PerplexityScore> scores(targets.size());
    parallel_for(targets.size(), threads, [&](size_t i) {
        PerplexityScore s;
        s.pair_index = static_cast<int64_t>(i);
        s.pp_in = lm_in.sentence_perplexity(targets[i]);
        s.pp_gen = lm_gen.sentence_perplexity(targets[i]);
        s.diff = s.pp_in - s.pp_gen;
        scores[i] = s;
    });
    rank_by_diff(scores);
    return scores;
}

// Mean sentence perplexity of a model over held-out sentences.
inline double mean_perplexity(const NGramModel& model, const std::vector<std::string>& sentences,
                              unsigned threads = 1) {
    if (sentences.empty()) throw UsageError("mean_perplexity: no sentences");
    std::vector<double> pp(sentences.size());
    parallel_for(sentences.size(), threads,
                 [&](size_t i) { pp[i] = model.sentence_perplexity(sentences[i]); });
    double sum = 0;
    for (double v : pp) sum += v;
    return sum / static_cast<double>(pp.size());
}

// Ranking TSV: index, pp_in, pp_gen, diff; one row per pair in rank order.
inline void write_ranking_tsv(const std::vector<PerplexityScore>& scores, const std::string& path) {
    std::vector<std::string> lines;
    lines.reserve(scores.size());
    for (const auto& s : scores) {
        std::string line = std::to_string(s.pair_index);
        line += '\t';
        line += fmt_real(s.pp_in);
        line += '\t';
        line += fmt_real(s.pp_gen);
        line += '\t';
        line += fmt_real(s.diff);
        lines.push_back(std::move(line));
    }
    write_lines(path, lines);
}

inline std::vector<PerplexityScore> read_ranking_tsv(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    std::vector<PerplexityScore> scores;
    scores.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_tsv(lines[i]);
        if (f.size() != 4)
            throw DataError(path + ":" + std::to_string(i + 1) + ": expected 4 columns");
        PerplexityScore s;
        s.pair_index = parse_int(f[0], "index");
        s.pp_in = parse_real(f[1], "pp_in");
        s.pp_gen = parse_real(f[2], "pp_gen");
        s.diff = parse_real(f[3], "diff");
        scores.push_back(s);
    }
    return scores;
}

}  // namespace forma
