// Independent reference implementations used to compute expected values.
// These deliberately share no code with the library: string n-grams in
// ordered maps, context counts by marginalization, direct probability
// products. Slow and obviously correct.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

struct Lm {
    int order = 1;
    double k = 0.1;
    std::set<std::string> vocab;
    std::map<std::vector<std::string>, long long> counts;  // all n-gram lengths
    long long total = 0;                                   // unigram event total

    double v() const { return static_cast<double>(vocab.size()) + 2.0; }  // + UNK + EOS

    std::vector<std::string> closed_vocab() const {
        std::vector<std::string> syms(vocab.begin(), vocab.end());
        syms.push_back("<UNK>");
        syms.push_back("<EOS>");
        return syms;
    }

    long long context_count(const std::vector<std::string>& ctx) const {
        long long sum = 0;
        for (const auto& w : closed_vocab()) {
            std::vector<std::string> g = ctx;
            g.push_back(w);
            auto it = counts.find(g);
            if (it != counts.end()) sum += it->second;
        }
        return sum;
    }

    double prob(std::vector<std::string> history, const std::string& w, int level) const {
        const double kv = k * v();
        if (level == 1) {
            auto it = counts.find({w});
            double c = it == counts.end() ? 0.0 : double(it->second);
            return (c + k) / (double(total) + kv);
        }
        std::vector<std::string> ctx(history.end() - (level - 1), history.end());
        std::vector<std::string> gram = ctx;
        gram.push_back(w);
        auto it = counts.find(gram);
        double cg = it == counts.end() ? 0.0 : double(it->second);
        double cc = double(context_count(ctx));
        double lower = prob(history, w, level - 1);
        return (cg + kv * lower) / (cc + kv);
    }

    double next_prob(const std::vector<std::string>& history, const std::string& w) const {
        std::vector<std::string> h(static_cast<size_t>(order - 1), "<BOS>");
        for (size_t i = 0; i < history.size() && i < h.size(); ++i)
            h[h.size() - 1 - i] = history[history.size() - 1 - i];
        return prob(h, w, order);
    }

    double sentence_pp(const std::string& sentence) const {
        std::vector<std::string> toks;
        for (const auto& t : split_ws(sentence))
            toks.push_back(vocab.count(t) ? t : std::string("<UNK>"));
        toks.push_back("<EOS>");
        std::vector<std::string> hist(static_cast<size_t>(order - 1), "<BOS>");
        double log_sum = 0;
        for (const auto& w : toks) {
            log_sum += std::log(prob(hist, w, order));
            hist.push_back(w);
        }
        return std::exp(-log_sum / double(toks.size()));
    }
};

inline Lm train(const std::vector<std::string>& sentences, const std::set<std::string>& vocab,
                int order, double k) {
    Lm lm;
    lm.order = order;
    lm.k = k;
    lm.vocab = vocab;
    for (const auto& s : sentences) {
        std::vector<std::string> toks;
        for (const auto& t : split_ws(s)) toks.push_back(vocab.count(t) ? t : std::string("<UNK>"));
        toks.push_back("<EOS>");
        for (size_t pos = 0; pos < toks.size(); ++pos) {
            for (int level = 1; level <= order; ++level) {
                std::vector<std::string> gram;
                for (int back = level - 1; back >= 0; --back) {
                    long long j = static_cast<long long>(pos) - back;
                    gram.push_back(j < 0 ? std::string("<BOS>") : toks[static_cast<size_t>(j)]);
                }
                ++lm.counts[gram];
                if (level == 1) ++lm.total;
            }
        }
    }
    return lm;
}

// Exhaustive best-window search by direct summation.
inline std::pair<size_t, double> best_window_bruteforce(const std::vector<double>& scores,
                                                        size_t window) {
    size_t best_start = 0;
    double best_sum = 0;
    bool first = true;
    for (size_t start = 0; start + window <= scores.size(); ++start) {
        double sum = 0;
        for (size_t j = 0; j < window; ++j) sum += scores[start + j];
        if (first || sum > best_sum) {
            best_sum = sum;
            best_start = start;
            first = false;
        }
    }
    return {best_start, best_sum / double(window)};
}

// Label counting straight from the rule text.
inline long long easy_labeled_count(const std::vector<long long>& f_pos,
                                    const std::vector<long long>& i_pos, long long theta) {
    long long n = 0;
    for (size_t i = 0; i < f_pos.size(); ++i) {
        if (f_pos[i] < theta && theta < i_pos[i]) ++n;
        else if (i_pos[i] < theta && theta < f_pos[i]) ++n;
    }
    return n;
}

inline long long full_labeled_count(const std::vector<long long>& f_pos,
                                    const std::vector<long long>& i_pos, long long alpha) {
    long long n = 0;
    for (size_t i = 0; i < f_pos.size(); ++i) {
        if (i_pos[i] - f_pos[i] > alpha) ++n;
        else if (f_pos[i] - i_pos[i] > alpha) ++n;
    }
    return n;
}

}  // namespace oracle
