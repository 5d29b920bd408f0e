#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/params.hpp"
#include "conlearn/models/lstm.hpp"
#include "conlearn/models/output.hpp"
#include "conlearn/models/vocab.hpp"
#include "conlearn/random.hpp"

namespace conlearn::models {

struct TaggerConfig {
  std::size_t vocab = 0;
  std::size_t tags = 9;
  std::size_t embed = 32;
  std::size_t hidden = 64;
};

/// Left-to-right LSTM emitting one tag distribution per token.
class Tagger {
 public:
  explicit Tagger(TaggerConfig cfg) : cfg_(cfg), cell_{"tag", cfg.embed, cfg.hidden} {
    if (cfg.vocab == 0 || cfg.tags == 0) throw ConfigError("tagger needs a vocabulary and a tag set");
  }

  const TaggerConfig& config() const { return cfg_; }

  ad::ParamSet init(Rng& rng, double scale = 0.08) const {
    ad::ParamSet p;
    p.add("tag.embed", ad::Tensor({cfg_.vocab, cfg_.embed}));
    cell_.add_params(p);
    p.add("tag.out.W", ad::Tensor({cfg_.hidden, cfg_.tags}));
    p.add("tag.out.b", ad::Tensor({cfg_.tags}));
    ad::init_uniform(p, rng, scale);
    return p;
  }

  /// Batch forward. probs is [batch*T, tags] with (example e, position t) at row e*T + t,
  /// T the longest sequence; padded rows exist but are not listed in `rows`.
  FactoredOutput forward(ad::Graph& g, const Bound& p, const std::vector<std::vector<int>>& seqs) const {
    auto z = logits(g, p, seqs);
    FactoredOutput out;
    out.probs = g.softmax(z.first);
    out.classes = cfg_.tags;
    out.rows = z.second;
    return out;
  }

  /// Mean per-token cross-entropy against gold tags.
  ad::Var supervised_loss(ad::Graph& g, const Bound& p, const std::vector<std::vector<int>>& seqs,
                          const std::vector<std::vector<int>>& gold) const {
    if (gold.size() != seqs.size()) throw ContractViolation("tagger: gold/batch size mismatch");
    auto [z, rows] = logits(g, p, seqs);
    const std::size_t total = g.value(z).rows();
    std::vector<std::size_t> target(total, 0);
    ad::Tensor mask({total});
    std::size_t count = 0;
    for (std::size_t e = 0; e < seqs.size(); ++e) {
      if (gold[e].size() != seqs[e].size()) throw ContractViolation("tagger: gold length differs from input");
      for (std::size_t t = 0; t < rows[e].size(); ++t) {
        const int tag = gold[e][t];
        if (tag < 0 || static_cast<std::size_t>(tag) >= cfg_.tags) throw InputError("tag id out of range");
        target[rows[e][t]] = static_cast<std::size_t>(tag);
        mask.data[rows[e][t]] = 1.0;
        ++count;
      }
    }
    if (count == 0) throw ContractViolation("tagger: batch has no tokens");
    auto nll = g.sum(g.mul(g.constant(std::move(mask)), g.pick(g.log_softmax(z), target)));
    return g.scale(nll, -1.0 / static_cast<double>(count));
  }

 private:
  std::pair<ad::Var, std::vector<std::vector<std::size_t>>> logits(ad::Graph& g, const Bound& p,
                                                                   const std::vector<std::vector<int>>& seqs) const {
    if (seqs.empty()) throw ContractViolation("tagger: empty batch");
    std::size_t longest = 0;
    for (const auto& s : seqs) {
      if (s.empty()) throw InputError("tagger: empty token sequence");
      for (int id : s)
        if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab) throw InputError("tagger: token id out of range");
      longest = std::max(longest, s.size());
    }
    const std::size_t b = seqs.size();
    auto state = cell_.zero_state(g, b);
    auto table = bound(p, "tag.embed");
    std::vector<ad::Var> hs;
    for (std::size_t t = 0; t < longest; ++t) {
      std::vector<int> ids(b, Vocab::kPad);
      for (std::size_t r = 0; r < b; ++r)
        if (t < seqs[r].size()) ids[r] = seqs[r][t];
      // positions past a sequence's end feed on PAD; those rows are never read
      state = cell_.step(g, p, embed(g, table, ids), state);
      hs.push_back(state.h);
    }
    auto stacked = g.reshape(hs.size() == 1 ? hs[0] : g.concat(hs), {b * longest, cfg_.hidden});
    auto z = g.add_bias(g.matmul(stacked, bound(p, "tag.out.W")), bound(p, "tag.out.b"));
    std::vector<std::vector<std::size_t>> rows(b);
    for (std::size_t e = 0; e < b; ++e)
      for (std::size_t t = 0; t < seqs[e].size(); ++t) rows[e].push_back(e * longest + t);
    return {z, rows};
  }

  TaggerConfig cfg_;
  LstmCell cell_;
};

}  // namespace conlearn::models
