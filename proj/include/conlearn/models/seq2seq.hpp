#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/params.hpp"
#include "conlearn/models/lstm.hpp"
#include "conlearn/models/output.hpp"
#include "conlearn/models/vocab.hpp"
#include "conlearn/random.hpp"

namespace conlearn::models {

struct Seq2SeqConfig {
  std::size_t vocab = 0;
  std::size_t embed = 32;
  std::size_t hidden = 64;
  bool reverse_source = true;
};

enum class DecodeMode { Greedy, Sample };

/// LSTM encoder-decoder. The decoder starts from the encoder's final state.
class Seq2Seq {
 public:
  explicit Seq2Seq(Seq2SeqConfig cfg)
      : cfg_(cfg), enc_{"enc", cfg.embed, cfg.hidden}, dec_{"dec", cfg.embed, cfg.hidden} {
    if (cfg.vocab <= 3) throw ConfigError("seq2seq vocabulary must hold symbols beyond PAD/BOS/EOS");
  }

  const Seq2SeqConfig& config() const { return cfg_; }

  ad::ParamSet init(Rng& rng, double scale = 0.08) const {
    ad::ParamSet p;
    p.add("enc.embed", ad::Tensor({cfg_.vocab, cfg_.embed}));
    enc_.add_params(p);
    p.add("dec.embed", ad::Tensor({cfg_.vocab, cfg_.embed}));
    dec_.add_params(p);
    p.add("out.W", ad::Tensor({cfg_.hidden, cfg_.vocab}));
    p.add("out.b", ad::Tensor({cfg_.vocab}));
    ad::init_uniform(p, rng, scale);
    return p;
  }

  /// Final encoder state per source, [batch, hidden]. Empty sources get the zero state.
  LstmState encode(ad::Graph& g, const Bound& p, const std::vector<std::vector<int>>& src) const {
    if (src.empty()) throw ContractViolation("seq2seq: empty batch");
    std::size_t longest = 0;
    for (const auto& s : src) {
      for (int id : s)
        if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab) throw InputError("seq2seq: token id out of range");
      longest = std::max(longest, s.size());
    }
    auto state = enc_.zero_state(g, src.size());
    auto table = bound(p, "enc.embed");
    for (std::size_t t = 0; t < longest; ++t) {
      std::vector<int> ids(src.size(), Vocab::kPad);
      std::vector<bool> active(src.size(), false);
      for (std::size_t r = 0; r < src.size(); ++r) {
        const auto& s = src[r];
        if (t >= s.size()) continue;
        ids[r] = cfg_.reverse_source ? s[s.size() - 1 - t] : s[t];
        active[r] = true;
      }
      auto next = enc_.step(g, p, embed(g, table, ids), state);
      state = masked_update(g, state, next, active, cfg_.hidden);
    }
    return state;
  }

  /// Repeat each row of a state `k` times (row r -> rows r*k .. r*k+k-1).
  static LstmState replicate(ad::Graph& g, const LstmState& s, std::size_t k) {
    if (k == 1) return s;
    const std::size_t b = g.value(s.h).rows();
    std::vector<std::size_t> rows;
    rows.reserve(b * k);
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t j = 0; j < k; ++j) rows.push_back(r);
    return {g.gather_rows(s.h, rows), g.gather_rows(s.c, rows)};
  }

  /// Mean per-token negative log-likelihood of `gold` (EOS appended) under teacher forcing.
  ad::Var teacher_forced_loss(ad::Graph& g, const Bound& p, const LstmState& init,
                              const std::vector<std::vector<int>>& gold) const {
    const std::size_t b = gold.size();
    if (b == 0 || g.value(init.h).rows() != b) throw ContractViolation("seq2seq: gold/state batch mismatch");
    std::size_t longest = 0;
    for (const auto& y : gold) longest = std::max(longest, y.size());
    auto state = init;
    auto table = bound(p, "dec.embed");
    std::vector<int> prev(b, Vocab::kBos);
    std::vector<ad::Var> terms;
    std::size_t count = 0;
    for (std::size_t t = 0; t <= longest; ++t) {
      std::vector<std::size_t> target(b, Vocab::kPad);
      ad::Tensor mask({b});
      for (std::size_t r = 0; r < b; ++r) {
        if (t > gold[r].size()) continue;
        target[r] = static_cast<std::size_t>(t < gold[r].size() ? gold[r][t] : Vocab::kEos);
        mask.data[r] = 1.0;
        ++count;
      }
      state = dec_.step(g, p, embed(g, table, prev), state);
      auto logp = g.log_softmax(logits(g, p, state.h));
      terms.push_back(g.sum(g.mul(g.constant(std::move(mask)), g.pick(logp, target))));
      for (std::size_t r = 0; r < b; ++r) prev[r] = static_cast<int>(target[r]);
    }
    return g.scale(g.add_n(terms), -1.0 / static_cast<double>(count));
  }

  /// Free-running decode until every row emits EOS or `max_len` steps elapse.
  Generation decode(ad::Graph& g, const Bound& p, const LstmState& init, std::size_t max_len, DecodeMode mode,
                    Rng* rng) const {
    if (max_len == 0) throw ContractViolation("seq2seq: max_len must be at least 1");
    if (mode == DecodeMode::Sample && rng == nullptr) throw ContractViolation("seq2seq: sampling needs an rng");
    const std::size_t b = g.value(init.h).rows();
    Generation out;
    out.tokens.assign(b, {});
    out.truncated.assign(b, true);
    auto state = init;
    auto table = bound(p, "dec.embed");
    std::vector<int> prev(b, Vocab::kBos);
    std::vector<bool> done(b, false);
    std::vector<ad::Var> terms;
    for (std::size_t t = 0; t < max_len; ++t) {
      state = dec_.step(g, p, embed(g, table, prev), state);
      auto probs = g.softmax(logits(g, p, state.h));
      out.step_probs.push_back(probs);
      const auto& pv = g.value(probs);
      std::vector<std::size_t> chosen(b, Vocab::kPad);
      ad::Tensor mask({b});
      for (std::size_t r = 0; r < b; ++r) {
        if (done[r]) continue;
        std::span<const double> row(pv.data.data() + r * cfg_.vocab, cfg_.vocab);
        const std::size_t c = mode == DecodeMode::Greedy
                                  ? static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())
                                  : static_cast<std::size_t>(sample_categorical(*rng, row));
        chosen[r] = c;
        mask.data[r] = 1.0;
        if (c == static_cast<std::size_t>(Vocab::kEos)) {
          done[r] = true;
          out.truncated[r] = false;
        } else {
          out.tokens[r].push_back(static_cast<int>(c));
        }
      }
      terms.push_back(g.mul(g.constant(std::move(mask)), g.log(g.pick(probs, chosen))));
      for (std::size_t r = 0; r < b; ++r) prev[r] = static_cast<int>(chosen[r]);
      if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
    }
    out.log_prob = terms.empty() ? g.constant(ad::Tensor({b})) : g.add_n(terms);
    return out;
  }

 private:
  // PAD and BOS are never valid outputs; a large negative offset zeroes them after softmax.
  ad::Var logits(ad::Graph& g, const Bound& p, ad::Var h) const {
    ad::Tensor block({cfg_.vocab});
    block.data[Vocab::kPad] = block.data[Vocab::kBos] = -1e4;
    auto z = g.add_bias(g.matmul(h, bound(p, "out.W")), bound(p, "out.b"));
    return g.add_bias(z, g.constant(std::move(block)));
  }

  Seq2SeqConfig cfg_;
  LstmCell enc_;
  LstmCell dec_;
};

/// Output length cap for a source of length n.
inline std::size_t default_max_len(std::size_t n) { return n + n / 2 + 6; }

}  // namespace conlearn::models
