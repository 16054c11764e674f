#include "sbl/numerics/autograd.hpp"

#include <unordered_set>

#include "sbl/error.hpp"

namespace sbl {

namespace {

thread_local bool t_grad_enabled = true;
thread_local KinkRecorder* t_kink_recorder = nullptr;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void Var::zero_grad() const { node_->grad_buffer().fill(0.0); }

void Var::backward() const {
  if (node_->value.numel() != 1) {
    fail(ErrorKind::dimension,
         "backward() needs a scalar root, got " + node_->value.shape_str());
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; `order` ends up parents-before-children.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward) n->grad_buffer().fill(0.0);
  }
  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool grad_enabled() { return t_grad_enabled; }

KinkRecorder::KinkRecorder() : hash_(kFnvOffset), previous_(t_kink_recorder) {
  t_kink_recorder = this;
}

KinkRecorder::~KinkRecorder() { t_kink_recorder = previous_; }

void KinkRecorder::mix(std::uint64_t v) {
  hash_ ^= v;
  hash_ *= kFnvPrime;
}

void KinkRecorder::record(std::span<const std::uint8_t> mask) {
  if (!t_kink_recorder) return;
  for (auto m : mask) t_kink_recorder->mix(m);
}

void KinkRecorder::record(std::span<const std::size_t> indices) {
  if (!t_kink_recorder) return;
  for (auto i : indices) t_kink_recorder->mix(i);
}

}  // namespace sbl
