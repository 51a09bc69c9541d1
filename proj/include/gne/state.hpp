#pragma once

#include "gne/types.hpp"

namespace gne {

/// Offsets of the stacked closed-loop state
///   [ x_1 .. x_N | mu_1 .. mu_N | z_1 .. z_N | eta_1 .. eta_N | w_1 .. w_N ].
///
/// Each agent block x_i holds `agent_width` numbers whose first `output_dim`
/// entries are the physical output fed through the projection. For chains of
/// integrators the block is (x_i1, ..., x_ir), each an n-vector.
struct StateLayout {
  Index n_agents = 0;
  Index output_dim = 0;   // n
  Index agent_width = 0;  // r * n for chains
  Index constraint_dim = 0;
  Index aggregate_dim = 0;

  enum class Block { agent, mu, z, eta, w };

  Index block_size(Block b) const noexcept {
    switch (b) {
      case Block::agent: return agent_width;
      case Block::mu:
      case Block::z: return constraint_dim;
      case Block::eta:
      case Block::w: return aggregate_dim;
    }
    return 0;
  }

  Index block_start(Block b) const noexcept {
    const Index agents = n_agents * agent_width;
    const Index mults = n_agents * constraint_dim;
    const Index ests = n_agents * aggregate_dim;
    switch (b) {
      case Block::agent: return 0;
      case Block::mu: return agents;
      case Block::z: return agents + mults;
      case Block::eta: return agents + 2 * mults;
      case Block::w: return agents + 2 * mults + ests;
    }
    return 0;
  }

  /// Offset of player i's slice of block b.
  Index offset(Block b, Index i) const noexcept { return block_start(b) + i * block_size(b); }

  Index total() const noexcept { return n_agents * (agent_width + 2 * constraint_dim + 2 * aggregate_dim); }

  bool operator==(const StateLayout&) const = default;
};

/// Flat closed-loop state together with its layout.
template <typename Scalar = double>
struct SimState {
  using Block = StateLayout::Block;

  StateLayout layout;
  Vector<Scalar> data;

  SimState() = default;
  explicit SimState(const StateLayout& lay) : layout(lay), data(Vector<Scalar>::Zero(lay.total())) {}
  SimState(const StateLayout& lay, Vector<Scalar> values) : layout(lay), data(std::move(values)) {
    if (data.size() != layout.total()) {
      throw ConfigError("state: data size " + std::to_string(data.size()) + " does not match layout size " +
                        std::to_string(layout.total()));
    }
  }

  auto slice(Block b, Index i) { return data.segment(layout.offset(b, i), layout.block_size(b)); }
  auto slice(Block b, Index i) const { return data.segment(layout.offset(b, i), layout.block_size(b)); }

  /// Whole block as a (block_size x N) column-per-agent matrix view.
  auto view(Block b) {
    return Eigen::Map<Matrix<Scalar>>(data.data() + layout.block_start(b), layout.block_size(b), layout.n_agents);
  }
  auto view(Block b) const {
    return Eigen::Map<const Matrix<Scalar>>(data.data() + layout.block_start(b), layout.block_size(b),
                                            layout.n_agents);
  }

  auto agent(Index i) { return slice(Block::agent, i); }
  auto agent(Index i) const { return slice(Block::agent, i); }
  auto mu(Index i) { return slice(Block::mu, i); }
  auto mu(Index i) const { return slice(Block::mu, i); }
  auto z(Index i) { return slice(Block::z, i); }
  auto z(Index i) const { return slice(Block::z, i); }
  auto eta(Index i) { return slice(Block::eta, i); }
  auto eta(Index i) const { return slice(Block::eta, i); }
  auto w(Index i) { return slice(Block::w, i); }
  auto w(Index i) const { return slice(Block::w, i); }

  /// Unprojected output C x_i (first n entries of the agent block).
  auto raw_output(Index i) const { return agent(i).head(layout.output_dim); }

  /// Stacked unprojected outputs.
  Vector<Scalar> raw_outputs() const {
    Vector<Scalar> out(layout.n_agents * layout.output_dim);
    for (Index i = 0; i < layout.n_agents; ++i) {
      out.segment(i * layout.output_dim, layout.output_dim) = raw_output(i);
    }
    return out;
  }

  Vector<Scalar> sum_z() const { return view(Block::z).rowwise().sum(); }
  Vector<Scalar> mean_mu() const {
    return view(Block::mu).rowwise().sum() / static_cast<Scalar>(layout.n_agents);
  }
};

}  // namespace gne
