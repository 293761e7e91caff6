#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/parallel.hpp"
#include "forma/text.hpp"

namespace forma {

// A reference sentence annotated at phrase level. Markers [F]...[/F] or
// [I]...[/I] wrap the register-bearing phrases; polarity records which
// annotation file the line came from.
struct AnnotatedReference {
    std::string plain_text;            // markers stripped, whitespace collapsed
    std::vector<std::string> phrases;  // marked phrases in order
    Formality polarity = Formality::None;
};

// Extracts marked phrases. Markers must be balanced and non-nested; both
// marker letters are accepted in any file. Offsets in error messages are
// byte positions.
inline AnnotatedReference parse_annotated(std::string_view line,
                                          Formality polarity = Formality::None) {
    AnnotatedReference ref;
    ref.polarity = polarity;
    std::string plain;
    plain.reserve(line.size());
    std::string current;
    bool inside = false;
    char open_letter = 0;
    size_t i = 0;
    auto marker_at = [&](size_t pos, char& letter, bool& closing) -> size_t {
        // returns marker length, 0 if none
        if (line[pos] != '[') return 0;
        size_t p = pos + 1;
        closing = p < line.size() && line[p] == '/';
        if (closing) ++p;
        if (p >= line.size() || (line[p] != 'F' && line[p] != 'I')) return 0;
        letter = line[p];
        ++p;
        if (p >= line.size() || line[p] != ']') return 0;
        return p - pos + 1;
    };
    while (i < line.size()) {
        char letter = 0;
        bool closing = false;
        size_t len = marker_at(i, letter, closing);
        if (len == 0) {
            (inside ? current : plain) += line[i];
            ++i;
            continue;
        }
        if (!closing) {
            if (inside)
                throw DataError("nested formality marker at byte " + std::to_string(i));
            inside = true;
            open_letter = letter;
        } else {
            if (!inside)
                throw DataError("closing marker without opener at byte " + std::to_string(i));
            if (letter != open_letter)
                throw DataError(std::string("mismatched marker [/") + letter + "] at byte " +
                                std::to_string(i));
            std::string phrase = collapse_whitespace(current);
            if (!phrase.empty()) ref.phrases.push_back(std::move(phrase));
            plain += current;
            current.clear();
            inside = false;
        }
        i += len;
    }
    if (inside) throw DataError("unclosed formality marker");
    ref.plain_text = collapse_whitespace(plain);
    return ref;
}

inline std::vector<AnnotatedReference> load_annotated_file(const std::string& path,
                                                           Formality polarity) {
    std::vector<std::string> lines = read_lines(path);
    std::vector<AnnotatedReference> refs;
    refs.reserve(lines.size());
    for (size_t i = 0; i < lines.size(); ++i) {
        try {
            refs.push_back(parse_annotated(lines[i], polarity));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return refs;
}

enum class JudgmentKind { Correct, Incorrect, Skipped };

struct Judgment {
    JudgmentKind kind = JudgmentKind::Skipped;
    int n_desired = 0;   // desired-register phrases found in the hypothesis
    int n_opposite = 0;  // opposite-register phrases found
};

// Whole-phrase occurrence at token boundaries, case-sensitive: the phrase
// tokens must appear as a consecutive token run in the hypothesis.
inline bool phrase_in_tokens(const std::vector<std::string>& hyp_tokens,
                             const std::string& phrase) {
    std::vector<std::string> p = tokenize(phrase);
    if (p.empty() || p.size() > hyp_tokens.size()) return false;
    for (size_t i = 0; i + p.size() <= hyp_tokens.size(); ++i) {
        bool all = true;
        for (size_t j = 0; j < p.size(); ++j) {
            if (hyp_tokens[i + j] != p[j]) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

// Correct when strictly more desired-register phrases match than
// opposite-register ones; a sample with no matches at all is skipped.
inline Judgment judge_hypothesis(std::string_view hyp, const AnnotatedReference& desired_ref,
                                 const AnnotatedReference& opposite_ref) {
    if (desired_ref.polarity == opposite_ref.polarity)
        throw UsageError("judge_hypothesis: reference polarities must differ");
    std::vector<std::string> hyp_tokens = tokenize(hyp);
    Judgment j;
    for (const auto& phrase : desired_ref.phrases)
        if (phrase_in_tokens(hyp_tokens, phrase)) ++j.n_desired;
    for (const auto& phrase : opposite_ref.phrases)
        if (phrase_in_tokens(hyp_tokens, phrase)) ++j.n_opposite;
    if (j.n_desired + j.n_opposite == 0) j.kind = JudgmentKind::Skipped;
    else if (j.n_desired > j.n_opposite) j.kind = JudgmentKind::Correct;
    else j.kind = JudgmentKind::Incorrect;
    return j;
}

struct ScoreReport {
    std::optional<double> accuracy;  // empty when no sample was evaluated
    int64_t correct = 0;
    int64_t incorrect = 0;
    int64_t skipped = 0;
    std::vector<Judgment> judgments;

    int64_t evaluated() const { return correct + incorrect; }

    std::vector<std::string> render() const {
        std::vector<std::string> lines;
        lines.push_back("samples=" + std::to_string(judgments.size()));
        lines.push_back("evaluated=" + std::to_string(evaluated()));
        lines.push_back("correct=" + std::to_string(correct));
        lines.push_back("incorrect=" + std::to_string(incorrect));
        lines.push_back("skipped=" + std::to_string(skipped));
        lines.push_back("accuracy=" + (accuracy ? fmt_real(*accuracy) : std::string("undefined")));
        return lines;
    }
};

// Judges each hypothesis against the reference pair picked by its context
// and aggregates accuracy over the non-skipped samples.
inline ScoreReport corpus_accuracy(const std::vector<std::string>& hyps,
                                   const std::vector<AnnotatedReference>& formal_refs,
                                   const std::vector<AnnotatedReference>& informal_refs,
                                   const std::vector<Formality>& contexts, unsigned threads = 1) {
    if (hyps.size() != formal_refs.size() || hyps.size() != informal_refs.size() ||
        hyps.size() != contexts.size())
        throw DataError("corpus_accuracy: hypothesis, reference and context counts differ (" +
                        std::to_string(hyps.size()) + ", " + std::to_string(formal_refs.size()) +
                        ", " + std::to_string(informal_refs.size()) + ", " +
                        std::to_string(contexts.size()) + ")");
    ScoreReport report;
    report.judgments.resize(hyps.size());
    parallel_for(hyps.size(), threads, [&](size_t i) {
        if (contexts[i] == Formality::None)
            throw UsageError("corpus_accuracy: context must be F or I at sample " +
                             std::to_string(i));
        const auto& desired = contexts[i] == Formality::Formal ? formal_refs[i] : informal_refs[i];
        const auto& opp = contexts[i] == Formality::Formal ? informal_refs[i] : formal_refs[i];
        report.judgments[i] = judge_hypothesis(hyps[i], desired, opp);
    });
    for (const auto& j : report.judgments) {
        switch (j.kind) {
            case JudgmentKind::Correct: ++report.correct; break;
            case JudgmentKind::Incorrect: ++report.incorrect; break;
            case JudgmentKind::Skipped: ++report.skipped; break;
        }
    }
    if (report.evaluated() > 0)
        report.accuracy = static_cast<double>(report.correct) /
                          static_cast<double>(report.evaluated());
    return report;
}

// Per-sample judgment TSV: index, judgment, n_desired, n_opposite.
inline std::vector<std::string> judgments_tsv(const ScoreReport& report) {
    std::vector<std::string> lines;
    lines.reserve(report.judgments.size());
    for (size_t i = 0; i < report.judgments.size(); ++i) {
        const auto& j = report.judgments[i];
        const char* kind = j.kind == JudgmentKind::Correct ? "correct"
                           : j.kind == JudgmentKind::Incorrect ? "incorrect"
                                                               : "skipped";
        lines.push_back(std::to_string(i) + "\t" + kind + "\t" + std::to_string(j.n_desired) +
                        "\t" + std::to_string(j.n_opposite));
    }
    return lines;
}

}  // namespace forma
