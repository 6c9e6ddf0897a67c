#include "buffer.hpp"

#include <string>

#include "errors.hpp"

namespace ugcpl {

ExperienceBuffer::ExperienceBuffer(int capacity, int oversample)
    : capacity_(capacity), oversample_(oversample) {
  if (capacity_ <= 0) throw InvalidArgumentError("buffer capacity must be positive");
  if (oversample_ < 0) throw InvalidArgumentError("buffer oversample must be non-negative");
}

int ExperienceBuffer::append_rollout(const std::vector<Transition>& rollout) {
  if (rollout.empty()) throw InvalidArgumentError("append_rollout: empty rollout");
  int32_t id = next_rollout_id_++;
  initials_.push_back({rollout.front().state, rollout.front().goal_id});
  for (size_t i = 0; i < rollout.size(); ++i) {
    Transition t = rollout[i];
    t.rollout_id = id;
    t.step_index = static_cast<int32_t>(i);
    t.duplicate = false;
    records_.push_back(t);
    if (t.done && t.reward > 0.0f) {
      Transition dup = t;
      dup.duplicate = true;
      for (int k = 0; k < oversample_; ++k) records_.push_back(dup);
    }
  }
  return id;
}

void ExperienceBuffer::truncate(Rng& rng) {
  if (records_.size() <= static_cast<size_t>(capacity_)) return;
  shuffle(records_, rng);
  records_.resize(static_cast<size_t>(capacity_));
}

size_t sample_negative(const ExperienceBuffer& buffer, int32_t rollout_id, int32_t t, Rng& rng) {
  if (buffer.size() == 0) throw InsufficientDataError("sample_negative: buffer is empty");

  auto admissible = [&](const Transition& r) {
    return !(r.rollout_id == rollout_id && r.step_index >= t - 1 && r.step_index <= t + 2);
  };

  // rejection sampling stays uniform over the admissible set; the forbidden
  // window is tiny relative to any real buffer
  for (int attempt = 0; attempt < 64; ++attempt) {
    size_t i = static_cast<size_t>(rng.next_below(buffer.size()));
    if (admissible(buffer[i])) return i;
  }

  // nearly everything is forbidden; fall back to an explicit scan
  std::vector<size_t> ok;
  for (size_t i = 0; i < buffer.size(); ++i)
    if (admissible(buffer[i])) ok.push_back(i);
  if (ok.empty())
    throw InsufficientDataError("sample_negative: no admissible transition for rollout " +
                                std::to_string(rollout_id) + ", t=" + std::to_string(t));
  return ok[static_cast<size_t>(rng.next_below(ok.size()))];
}

}  // namespace ugcpl
