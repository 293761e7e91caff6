#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "forma/config.hpp"
#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/text.hpp"

namespace forma {

enum class DropReason {
    None = 0,
    Length,
    Ratio,
    Empty,
    Identical,
    CaseMismatch,
    PunctMismatch,
    NonAscii,
    ExactDuplicate,
    NearDuplicate,
    LowConfidence,
    kCount,
};

inline const char* drop_reason_name(DropReason r) {
    switch (r) {
        case DropReason::Length: return "length";
        case DropReason::Ratio: return "ratio";
        case DropReason::Empty: return "empty";
        case DropReason::Identical: return "identical";
        case DropReason::CaseMismatch: return "case_mismatch";
        case DropReason::PunctMismatch: return "punct_mismatch";
        case DropReason::NonAscii: return "non_ascii";
        case DropReason::ExactDuplicate: return "exact_duplicate";
        case DropReason::NearDuplicate: return "near_duplicate";
        case DropReason::LowConfidence: return "low_confidence";
        default: return "none";
    }
}

enum class AsciiMode { Strip, Drop };

struct FilterConfig {
    int64_t max_tokens = 250;
    double max_ratio = 1.5;
    double confidence_threshold = 0.7;
    AsciiMode ascii_mode = AsciiMode::Strip;
    bool enable_length = true;
    bool enable_ratio = true;
    bool enable_empty = true;
    bool enable_identical = true;
    bool enable_case = true;
    bool enable_punct = true;
    bool enable_ascii = true;

    void validate() const {
        if (max_tokens < 1) throw UsageError("filter config: max_tokens must be >= 1");
        if (!(max_ratio > 0)) throw UsageError("filter config: max_ratio must be > 0");
        if (confidence_threshold < 0 || confidence_threshold > 1)
            throw UsageError("filter config: confidence_threshold must be in [0,1]");
    }
};

// Stage functions record per-rule drops; the cascade driver (or the caller,
// for a standalone stage) sets input and output so that the totals always
// reconcile: input == output + sum of drops.
struct FilterStats {
    int64_t input = 0;
    int64_t output = 0;
    std::array<int64_t, static_cast<size_t>(DropReason::kCount)> drops{};

    void count_drop(DropReason r) { ++drops[static_cast<size_t>(r)]; }

    int64_t total_drops() const {
        int64_t n = 0;
        for (int64_t d : drops) n += d;
        return n;
    }

    bool reconciles() const { return input == output + total_drops(); }

    std::vector<std::string> render() const {
        std::vector<std::string> lines;
        lines.push_back("input=" + std::to_string(input));
        lines.push_back("output=" + std::to_string(output));
        for (size_t r = 1; r < static_cast<size_t>(DropReason::kCount); ++r)
            lines.push_back("drop." + std::string(drop_reason_name(static_cast<DropReason>(r))) +
                            "=" + std::to_string(drops[r]));
        return lines;
    }
};

// Fixed punctuation normalization table: typographic quotes, dashes,
// ellipsis and exotic spaces map to their ASCII forms, whitespace runs
// collapse to one space. Idempotent, and versioned by this table alone.
inline std::string normalize_punctuation(std::string_view sentence) {
    std::string mapped;
    mapped.reserve(sentence.size());
    size_t i = 0;
    while (i < sentence.size()) {
        auto d = utf8::decode(sentence, i);
        if (!d.valid) {
            mapped += sentence[i];
            i += d.length;
            continue;
        }
        switch (d.cp) {
            case 0x201C: case 0x201D: case 0x201E: case 0x201F:
            case 0x00AB: case 0x00BB:
                mapped += '"';
                break;
            case 0x2018: case 0x2019: case 0x201A: case 0x201B:
            case 0x2039: case 0x203A:
                mapped += '\'';
                break;
            case 0x2010: case 0x2011: case 0x2012: case 0x2013:
            case 0x2014: case 0x2015:
                mapped += '-';
                break;
            case 0x2026:
                mapped += "...";
                break;
            case 0x00A0: case 0x2007: case 0x2009: case 0x202F:
                mapped += ' ';
                break;
            default:
                utf8::encode(d.cp, mapped);
        }
        i += d.length;
    }
    return collapse_whitespace(mapped);
}

inline constexpr std::string_view kTerminalPunctuation = ".,!?;:";

inline char terminal_punctuation(std::string_view s) {
    if (s.empty()) return 0;
    char last = s.back();
    return kTerminalPunctuation.find(last) != std::string_view::npos ? last : 0;
}

inline bool is_all_ascii(std::string_view s) {
    for (unsigned char c : s)
        if (c >= 0x80) return false;
    return true;
}

inline std::string strip_non_ascii(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s)
        if (static_cast<unsigned char>(c) < 0x80) out += c;
    return collapse_whitespace(out);
}

struct CleanOutcome {
    bool kept = false;
    DropReason reason = DropReason::None;
    SentencePair pair;  // possibly modified (ascii strip mode)
};

// Rule cascade over one pair; the first failing rule is the reason. Expects
// punctuation-normalized text (the corpus-level entry point below applies
// normalize_punctuation first).
inline CleanOutcome clean_pair(const SentencePair& pair, const FilterConfig& cfg) {
    CleanOutcome out;
    out.pair = pair;
    const auto src_tokens = static_cast<int64_t>(tokenize(pair.source).size());
    const auto tgt_tokens = static_cast<int64_t>(tokenize(pair.target).size());
    auto drop = [&](DropReason r) {
        out.kept = false;
        out.reason = r;
        return out;
    };
    if (cfg.enable_length && (src_tokens > cfg.max_tokens || tgt_tokens > cfg.max_tokens))
        return drop(DropReason::Length);
    if (cfg.enable_ratio && src_tokens > 0 && tgt_tokens > 0) {
        const double hi = static_cast<double>(std::max(src_tokens, tgt_tokens));
        const double lo = static_cast<double>(std::min(src_tokens, tgt_tokens));
        if (hi / lo > cfg.max_ratio) return drop(DropReason::Ratio);
    }
    if (cfg.enable_empty && (src_tokens == 0 || tgt_tokens == 0)) return drop(DropReason::Empty);
    if (cfg.enable_identical && pair.source == pair.target) return drop(DropReason::Identical);
    if (cfg.enable_case) {
        CaseClass cs = first_char_case_class(pair.source);
        CaseClass ct = first_char_case_class(pair.target);
        if ((cs == CaseClass::Upper && ct == CaseClass::Lower) ||
            (cs == CaseClass::Lower && ct == CaseClass::Upper))
            return drop(DropReason::CaseMismatch);
    }
    if (cfg.enable_punct) {
        char ps = terminal_punctuation(pair.source);
        char pt = terminal_punctuation(pair.target);
        if ((ps || pt) && ps != pt) return drop(DropReason::PunctMismatch);
    }
    if (cfg.enable_ascii && !is_all_ascii(pair.source)) {
        if (cfg.ascii_mode == AsciiMode::Drop) return drop(DropReason::NonAscii);
        out.pair.source = strip_non_ascii(pair.source);
        if (out.pair.source.empty()) return drop(DropReason::NonAscii);
    }
    out.kept = true;
    return out;
}

// Normalizes punctuation on both sides, then applies the rule cascade.
// Survivor order is input order.
inline ParallelCorpus clean_corpus(const ParallelCorpus& corpus, const FilterConfig& cfg,
                                   FilterStats& stats) {
    cfg.validate();
    ParallelCorpus out;
    out.source_lang = corpus.source_lang;
    out.target_lang = corpus.target_lang;
    for (const auto& p : corpus.pairs) {
        SentencePair normalized = p;
        normalized.source = normalize_punctuation(p.source);
        normalized.target = normalize_punctuation(p.target);
        CleanOutcome outcome = clean_pair(normalized, cfg);
        if (!outcome.kept) {
            stats.count_drop(outcome.reason);
            continue;
        }
        out.pairs.push_back(std::move(outcome.pair));
    }
    return out;
}

namespace detail {

// Near-duplicate key: lowercase, terminal punctuation run stripped.
inline std::string near_dup_key(std::string_view s) {
    std::string lowered = lowercase_latin(s);
    while (!lowered.empty() &&
           kTerminalPunctuation.find(lowered.back()) != std::string_view::npos)
        lowered.pop_back();
    while (!lowered.empty() && lowered.back() == ' ') lowered.pop_back();
    return lowered;
}

}  // namespace detail

// Removes exact duplicates, then pairs equal after lowercasing and terminal
// punctuation stripping. Keeps the first occurrence, stable order.
inline ParallelCorpus dedup(const ParallelCorpus& corpus, FilterStats& stats) {
    ParallelCorpus out;
    out.source_lang = corpus.source_lang;
    out.target_lang = corpus.target_lang;
    std::unordered_set<std::string> exact, near;
    for (const auto& p : corpus.pairs) {
        std::string exact_key = p.source + '\t' + p.target;
        if (!exact.insert(exact_key).second) {
            stats.count_drop(DropReason::ExactDuplicate);
            continue;
        }
        std::string near_key = detail::near_dup_key(p.source) + '\t' + detail::near_dup_key(p.target);
        if (!near.insert(near_key).second) {
            stats.count_drop(DropReason::NearDuplicate);
            continue;
        }
        out.pairs.push_back(p);
    }
    return out;
}

// Keeps pairs whose external confidence is at or above the threshold.
inline ParallelCorpus confidence_filter(const ParallelCorpus& corpus, double threshold,
                                        FilterStats& stats) {
    ParallelCorpus out;
    out.source_lang = corpus.source_lang;
    out.target_lang = corpus.target_lang;
    for (const auto& p : corpus.pairs) {
        if (!p.aux_score)
            throw DataError("confidence_filter: pair " + std::to_string(p.index) +
                            " has no confidence score");
        if (*p.aux_score >= threshold) {
            out.pairs.push_back(p);
        } else {
            stats.count_drop(DropReason::LowConfidence);
        }
    }
    return out;
}

// Full cleaning cascade: normalize + rule filters, dedup, and (when scores
// are attached) the confidence threshold.
inline ParallelCorpus prep_cascade(const ParallelCorpus& corpus, const FilterConfig& cfg,
                                   bool use_confidence, FilterStats& stats) {
    stats.input = static_cast<int64_t>(corpus.size());
    ParallelCorpus cur = clean_corpus(corpus, cfg, stats);
    cur = dedup(cur, stats);
    if (use_confidence) cur = confidence_filter(cur, cfg.confidence_threshold, stats);
    stats.output = static_cast<int64_t>(cur.size());
    return cur;
}

// prep config file: key=value entries mirroring FilterConfig.
inline FilterConfig filter_config_from(const Config& cfg) {
    FilterConfig fc;
    fc.max_tokens = cfg.get_int_or("max_tokens", fc.max_tokens);
    fc.max_ratio = cfg.get_real_or("max_ratio", fc.max_ratio);
    fc.confidence_threshold = cfg.get_real_or("confidence_threshold", fc.confidence_threshold);
    std::string mode = cfg.get_or("ascii", "strip");
    if (mode == "strip") fc.ascii_mode = AsciiMode::Strip;
    else if (mode == "drop") fc.ascii_mode = AsciiMode::Drop;
    else throw UsageError("prep config: ascii must be 'strip' or 'drop'");
    fc.enable_length = cfg.get_bool_or("filter.length", true);
    fc.enable_ratio = cfg.get_bool_or("filter.ratio", true);
    fc.enable_empty = cfg.get_bool_or("filter.empty", true);
    fc.enable_identical = cfg.get_bool_or("filter.identical", true);
    fc.enable_case = cfg.get_bool_or("filter.case", true);
    fc.enable_punct = cfg.get_bool_or("filter.punct", true);
    fc.enable_ascii = cfg.get_bool_or("filter.ascii", true);
    fc.validate();
    return fc;
}

}  // namespace forma
