#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "forma/error.hpp"
#include "forma/io.hpp"
#include "forma/text.hpp"

namespace forma {

enum class Formality { Formal, Informal, None };

inline char formality_char(Formality f) {
    switch (f) {
        case Formality::Formal: return 'F';
        case Formality::Informal: return 'I';
        default: return 'N';
    }
}

inline Formality formality_from_char(char c) {
    if (c == 'F') return Formality::Formal;
    if (c == 'I') return Formality::Informal;
    if (c == 'N') return Formality::None;
    throw DataError(std::string("unknown formality label: '") + c + "'");
}

inline Formality opposite(Formality f) {
    if (f == Formality::Formal) return Formality::Informal;
    if (f == Formality::Informal) return Formality::Formal;
    throw UsageError("context must be F or I");
}

struct SentencePair {
    std::string source;
    std::string target;
    int64_t index = 0;
    std::optional<double> aux_score;  // external confidence or quality score
};

struct ParallelCorpus {
    std::vector<SentencePair> pairs;
    std::string source_lang;
    std::string target_lang;

    size_t size() const { return pairs.size(); }

    std::vector<std::string> target_sentences() const {
        std::vector<std::string> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) out.push_back(p.target);
        return out;
    }

    std::vector<std::string> source_sentences() const {
        std::vector<std::string> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) out.push_back(p.source);
        return out;
    }
};

struct LabeledPair {
    SentencePair pair;
    Formality label = Formality::None;
};

struct LabeledCorpus {
    std::vector<LabeledPair> pairs;

    size_t size() const { return pairs.size(); }

    int64_t count(Formality f) const {
        int64_t n = 0;
        for (const auto& p : pairs)
            if (p.label == f) ++n;
        return n;
    }

    std::vector<std::string> targets_with_label(Formality f) const {
        std::vector<std::string> out;
        for (const auto& p : pairs)
            if (p.label == f) out.push_back(p.pair.target);
        return out;
    }
};

// Token set with a reserved out-of-vocabulary symbol. Tokens are stored
// sorted; ids are stable and dense. The two ids past the token range are
// the unk and end-of-sentence events, the third is the begin marker (only
// ever used as context).
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> tokens) {
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (const auto& t : tokens)
            if (t == kUnkToken)
                throw DataError("vocabulary contains the reserved unk symbol; "
                                "escape input through the corpus loaders");
        tokens_ = std::move(tokens);
        index_.reserve(tokens_.size());
        for (uint32_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
    }

    size_t size() const { return tokens_.size(); }
    bool contains(std::string_view tok) const { return index_.count(std::string(tok)) != 0; }

    uint32_t unk_id() const { return static_cast<uint32_t>(tokens_.size()); }
    uint32_t eos_id() const { return static_cast<uint32_t>(tokens_.size()) + 1; }
    uint32_t bos_id() const { return static_cast<uint32_t>(tokens_.size()) + 2; }

    // Size of the closed prediction space: tokens plus unk and EOS.
    uint32_t closed_size() const { return static_cast<uint32_t>(tokens_.size()) + 2; }

    uint32_t id_of(const std::string& tok) const {
        auto it = index_.find(tok);
        return it == index_.end() ? unk_id() : it->second;
    }

    const std::string& token_at(uint32_t id) const { return tokens_[id]; }

    std::string symbol_name(uint32_t id) const {
        if (id < tokens_.size()) return tokens_[id];
        if (id == unk_id()) return std::string(kUnkToken);
        if (id == eos_id()) return std::string(kEosToken);
        return std::string(kBosToken);
    }

    const std::vector<std::string>& tokens() const { return tokens_; }

    uint64_t hash() const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& t : tokens_) {
            h = fnv1a64(t, h);
            h = fnv1a64("\n", h);
        }
        return h;
    }

private:
    std::vector<std::string> tokens_;  // sorted, unique
    std::unordered_map<std::string, uint32_t> index_;
};

// All tokens with total count >= min_count. The default keeps exactly the
// non-singleton tokens.
inline Vocabulary extract_vocabulary(const std::vector<std::string>& sentences,
                                     int64_t min_count = 2) {
    if (min_count < 1) throw UsageError("extract_vocabulary: min_count must be >= 1");
    std::unordered_map<std::string, int64_t> counts;
    for (const auto& s : sentences)
        for (auto& tok : tokenize(s)) ++counts[std::move(tok)];
    std::vector<std::string> kept;
    for (auto& [tok, c] : counts)
        if (c >= min_count) kept.push_back(tok);
    return Vocabulary(std::move(kept));
}

inline ParallelCorpus load_parallel(const std::string& src_path, const std::string& tgt_path) {
    std::vector<std::string> src = read_corpus_lines(src_path);
    std::vector<std::string> tgt = read_corpus_lines(tgt_path);
    if (src.size() != tgt.size())
        throw DataError("aligned corpus line counts differ: " + src_path + " has " +
                        std::to_string(src.size()) + " lines, " + tgt_path + " has " +
                        std::to_string(tgt.size()));
    ParallelCorpus corpus;
    corpus.pairs.reserve(src.size());
    for (size_t i = 0; i < src.size(); ++i)
        corpus.pairs.push_back({std::move(src[i]), std::move(tgt[i]), static_cast<int64_t>(i), {}});
    return corpus;
}

inline void save_parallel(const ParallelCorpus& corpus, const std::string& src_path,
                          const std::string& tgt_path) {
    std::vector<std::string> src, tgt;
    src.reserve(corpus.size());
    tgt.reserve(corpus.size());
    for (const auto& p : corpus.pairs) {
        src.push_back(p.source);
        tgt.push_back(p.target);
    }
    write_lines(src_path, src);
    write_lines(tgt_path, tgt);
}

// Attaches one real score per line from an aligned sidecar file.
inline void load_aux_scores(ParallelCorpus& corpus, const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    if (lines.size() != corpus.size())
        throw DataError("aux score file " + path + " has " + std::to_string(lines.size()) +
                        " lines, corpus has " + std::to_string(corpus.size()));
    for (size_t i = 0; i < lines.size(); ++i)
        corpus.pairs[i].aux_score = parse_real(trim(lines[i]), "aux score line " + std::to_string(i + 1));
}

// Labeled corpus TSV: index, label, source, target. The canonical mined
// output keeps only F/I rows; include_none adds N rows, which the pivot
// stage needs to distinguish unlabeled overlap from absence.
inline void write_labeled_tsv(const LabeledCorpus& corpus, const std::string& path,
                              bool include_none = false) {
    std::vector<std::string> lines;
    for (const auto& lp : corpus.pairs) {
        if (lp.label == Formality::None && !include_none) continue;
        std::string line = std::to_string(lp.pair.index);
        line += '\t';
        line += formality_char(lp.label);
        line += '\t';
        line += lp.pair.source;
        line += '\t';
        line += lp.pair.target;
        lines.push_back(std::move(line));
    }
    write_lines(path, lines);
}

inline LabeledCorpus read_labeled_tsv(const std::string& path) {
    LabeledCorpus corpus;
    std::vector<std::string> lines = read_lines(path);
    std::unordered_set<int64_t> seen;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_tsv(lines[i]);
        if (f.size() != 4)
            throw DataError(path + ":" + std::to_string(i + 1) + ": expected 4 columns, got " +
                            std::to_string(f.size()));
        if (f[1].size() != 1)
            throw DataError(path + ":" + std::to_string(i + 1) + ": bad label '" + f[1] + "'");
        LabeledPair lp;
        lp.pair.index = parse_int(f[0], "index column");
        lp.pair.source = escape_reserved(f[2]);
        lp.pair.target = escape_reserved(f[3]);
        lp.label = formality_from_char(f[1][0]);
        if (!seen.insert(lp.pair.index).second)
            throw DataError(path + ":" + std::to_string(i + 1) + ": duplicate index " + f[0]);
        corpus.pairs.push_back(std::move(lp));
    }
    return corpus;
}

}  // namespace forma
