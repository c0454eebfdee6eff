#include "pcorr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace pcorr {

namespace {
constexpr double kLn10 = 2.302585092994046;
}

DecodingGraph build_graph(const Lexicon &lex, const NGramLM &g, const GraphOptions &opt) {
    if (lex.num_words() == 0) throw DataError("cannot build a graph from an empty lexicon");
    if (opt.order < 1) throw DataError("graph order must be >= 1");
    int gorder = std::min(opt.order, g.order());

    std::vector<std::string> words;
    if (opt.vocabulary.empty()) {
        words = lex.words();
    } else {
        for (const std::string &w : opt.vocabulary) words.push_back(fold_word(w));
        std::sort(words.begin(), words.end());
        words.erase(std::unique(words.begin(), words.end()), words.end());
        for (const std::string &w : words)
            if (!lex.contains(w)) throw OovError(w);
    }

    std::vector<std::vector<std::string>> contexts = g.listed_contexts(gorder - 1);
    std::map<std::vector<std::string>, int32_t> ctx_id;
    for (size_t i = 0; i < contexts.size(); ++i) ctx_id.emplace(contexts[i], static_cast<int32_t>(i));

    DecodingGraph graph;
    graph.inventory = lex.inventory();
    graph.output_words = words;

    std::vector<std::string> start_ctx;
    if (gorder >= 2) {
        start_ctx.push_back(NGramLM::kSentBegin);
        if (!ctx_id.count(start_ctx)) start_ctx.clear();
    }
    int32_t start = ctx_id.at(start_ctx);

    int32_t next_node = static_cast<int32_t>(contexts.size());
    std::vector<GraphArc> arcs;
    std::vector<double> eos(contexts.size());
    for (size_t ci = 0; ci < contexts.size(); ++ci) {
        const auto &ctx = contexts[ci];
        eos[ci] = kLn10 * g.cond_logprob(NGramLM::kSentEnd, ctx, gorder);
        for (size_t wi = 0; wi < words.size(); ++wi) {
            const std::string &w = words[wi];
            double lp = kLn10 * g.cond_logprob(w, ctx, gorder);
            std::vector<std::string> extended = ctx;
            extended.push_back(w);
            int32_t succ = ctx_id.at(g.listed_suffix(extended, gorder - 1));
            for (const PhoneSeq &pron : lex.pronunciations(w)) {
                double share = lp / static_cast<double>(pron.size());
                int32_t prev = static_cast<int32_t>(ci);
                for (size_t j = 0; j < pron.size(); ++j) {
                    bool last = j + 1 == pron.size();
                    int32_t dst = last ? succ : next_node++;
                    arcs.push_back({prev, dst, pron[j], last ? static_cast<int32_t>(wi) : -1,
                                    share});
                    prev = dst;
                }
            }
        }
    }

    // Reachability prune. In-word chains always terminate at a context node
    // and every context is final, so co-reachability holds for whatever
    // survives; it is asserted below anyway.
    int32_t total = next_node;
    std::vector<std::vector<int32_t>> out(static_cast<size_t>(total));
    for (size_t ai = 0; ai < arcs.size(); ++ai)
        out[static_cast<size_t>(arcs[ai].src)].push_back(static_cast<int32_t>(ai));
    std::vector<bool> reach(static_cast<size_t>(total), false);
    std::deque<int32_t> queue{start};
    reach[static_cast<size_t>(start)] = true;
    while (!queue.empty()) {
        int32_t n = queue.front();
        queue.pop_front();
        for (int32_t ai : out[static_cast<size_t>(n)]) {
            int32_t d = arcs[static_cast<size_t>(ai)].dst;
            if (!reach[static_cast<size_t>(d)]) {
                reach[static_cast<size_t>(d)] = true;
                queue.push_back(d);
            }
        }
    }

    std::vector<int32_t> remap(static_cast<size_t>(total), -1);
    int32_t kept = 0;
    int32_t kept_contexts = 0;
    for (int32_t n = 0; n < total; ++n) {
        if (!reach[static_cast<size_t>(n)]) continue;
        remap[static_cast<size_t>(n)] = kept++;
        if (n < static_cast<int32_t>(contexts.size())) {
            graph.contexts.push_back(contexts[static_cast<size_t>(n)]);
            graph.eos_weight.push_back(eos[static_cast<size_t>(n)]);
            ++kept_contexts;
        }
    }
    graph.num_nodes = kept;
    graph.context_count = kept_contexts;
    graph.start = remap[static_cast<size_t>(start)];
    for (const GraphArc &a : arcs) {
        if (!reach[static_cast<size_t>(a.src)]) continue;
        GraphArc b = a;
        b.src = remap[static_cast<size_t>(a.src)];
        b.dst = remap[static_cast<size_t>(a.dst)];
        graph.arcs.push_back(b);
    }
    std::stable_sort(graph.arcs.begin(), graph.arcs.end(),
                     [](const GraphArc &a, const GraphArc &b) { return a.src < b.src; });
    graph.arc_offset.assign(static_cast<size_t>(graph.num_nodes) + 1, 0);
    for (const GraphArc &a : graph.arcs) ++graph.arc_offset[static_cast<size_t>(a.src) + 1];
    for (size_t i = 1; i < graph.arc_offset.size(); ++i)
        graph.arc_offset[i] += graph.arc_offset[i - 1];

    // Context renumbering must keep contexts in front of in-word nodes.
    if (graph.start >= graph.context_count)
        throw std::logic_error("start node lost its context slot");
    for (const GraphArc &a : graph.arcs) {
        bool last_of_chain = a.word >= 0;
        if (last_of_chain && a.dst >= graph.context_count)
            throw std::logic_error("word-final arc must end at a context node");
    }
    return graph;
}

std::string dump_graph(const DecodingGraph &g) {
    std::ostringstream out;
    out << "start\t" << g.start << "\n";
    for (const GraphArc &a : g.arcs) {
        out << a.src << "\t" << a.dst << "\t" << g.inventory.label(a.phone) << "\t"
            << (a.word >= 0 ? g.word_label(a.word) : "-") << "\t" << fmt_sig(a.weight, 12)
            << "\n";
    }
    for (int32_t n = 0; n < g.context_count; ++n)
        out << "final\t" << n << "\t" << fmt_sig(g.eos_weight[static_cast<size_t>(n)], 12)
            << "\n";
    return out.str();
}

HmmView hmm_step_weights(const DecodingGraph &g, const ConfusionModel &cm) {
    HmmView view;
    view.graph = &g;
    view.cm = &cm;
    double pins = cm.p_ins();
    view.ln_pins = pins > 0.0 ? std::log(pins) : kLogZero;
    view.ln_keep = pins < 1.0 ? std::log(1.0 - pins) : kLogZero;
    view.to_cm.assign(static_cast<size_t>(g.inventory.size()), 0);
    for (PhoneId p = 1; p < g.inventory.size(); ++p) {
        int idx = cm.index_of(g.inventory.label(p));
        if (idx <= 0)
            throw DataError("confusion model lacks graph phone: " + g.inventory.label(p));
        view.to_cm[static_cast<size_t>(p)] = idx;
    }
    return view;
}

}  // namespace pcorr
