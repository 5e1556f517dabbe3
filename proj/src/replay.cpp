#include "rsd/replay.hpp"

#include <cstring>
#include <fstream>

namespace rsd {
namespace {

constexpr char kMagic[8] = {'R', 'S', 'D', 'R', 'P', 'L', 'Y', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, Index skill_dim, Index action_dim)
    : capacity_(capacity), skill_dim_(skill_dim), action_dim_(action_dim), width_(4 + action_dim + 4 + skill_dim + 1) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::push(const Observation& s, const Vector& a, const Observation& s_next, const Vector& z,
                        bool initial) {
  if (a.size() != action_dim_ || z.size() != skill_dim_) throw ConfigError("replay push: width mismatch");
  std::size_t at;
  if (size_ < capacity_) {
    at = size_++;
    data_.resize(size_ * width_);
  } else {
    at = head_;
    head_ = (head_ + 1) % capacity_;
  }
  Scalar* p = data_.data() + at * width_;
  for (int i = 0; i < 4; ++i) *p++ = s(i);
  for (Index i = 0; i < action_dim_; ++i) *p++ = a(i);
  for (int i = 0; i < 4; ++i) *p++ = s_next(i);
  for (Index i = 0; i < skill_dim_; ++i) *p++ = z(i);
  *p = initial ? 1.0 : 0.0;
  ++pushed_;
}

std::size_t ReplayBuffer::slot(std::size_t age) const {
  if (age >= size_) throw ConfigError("replay: age out of range");
  return size_ < capacity_ ? age : (head_ + age) % capacity_;
}

TransitionBatch ReplayBuffer::gather_slots(const std::vector<std::size_t>& slots) const {
  const Index B = static_cast<Index>(slots.size());
  TransitionBatch b;
  b.obs.resize(4, B);
  b.actions.resize(action_dim_, B);
  b.next_obs.resize(4, B);
  b.skills.resize(skill_dim_, B);
  b.initial.assign(B, false);
  for (Index j = 0; j < B; ++j) {
    const Scalar* p = data_.data() + slots[j] * width_;
    for (int i = 0; i < 4; ++i) b.obs(i, j) = *p++;
    for (Index i = 0; i < action_dim_; ++i) b.actions(i, j) = *p++;
    for (int i = 0; i < 4; ++i) b.next_obs(i, j) = *p++;
    for (Index i = 0; i < skill_dim_; ++i) b.skills(i, j) = *p++;
    b.initial[j] = *p != 0.0;
  }
  return b;
}

TransitionBatch ReplayBuffer::sample(Index batch_size, Rng& rng) const {
  if (size_ == 0) throw ConfigError("replay: sampling from an empty buffer");
  std::vector<std::size_t> slots(batch_size);
  for (auto& s : slots) s = rng.index(size_);
  return gather_slots(slots);
}

TransitionBatch ReplayBuffer::gather(const std::vector<std::size_t>& ages) const {
  std::vector<std::size_t> slots;
  slots.reserve(ages.size());
  for (auto a : ages) slots.push_back(slot(a));
  return gather_slots(slots);
}

void ReplayBuffer::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ConfigError("cannot write replay file '" + path + "'");
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, static_cast<std::uint64_t>(capacity_));
  write_pod(os, static_cast<std::int64_t>(skill_dim_));
  write_pod(os, static_cast<std::int64_t>(action_dim_));
  write_pod(os, static_cast<std::uint64_t>(head_));
  write_pod(os, static_cast<std::uint64_t>(size_));
  write_pod(os, pushed_);
  os.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size() * sizeof(Scalar)));
  if (!os) throw ConfigError("failed writing replay file '" + path + "'");
}

ReplayBuffer ReplayBuffer::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read replay file '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ConfigError("'" + path + "' is not a replay file");
  std::uint64_t capacity, head, size, pushed;
  std::int64_t skill_dim, action_dim;
  read_pod(is, capacity);
  read_pod(is, skill_dim);
  read_pod(is, action_dim);
  read_pod(is, head);
  read_pod(is, size);
  read_pod(is, pushed);
  ReplayBuffer rb(capacity, skill_dim, action_dim);
  rb.head_ = head;
  rb.size_ = size;
  rb.pushed_ = pushed;
  rb.data_.resize(size * rb.width_);
  is.read(reinterpret_cast<char*>(rb.data_.data()), static_cast<std::streamsize>(rb.data_.size() * sizeof(Scalar)));
  if (!is) throw ConfigError("truncated replay file '" + path + "'");
  return rb;
}

std::vector<Vector> StageReprBuffer::finals() const {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (final_flags[i]) out.push_back(states[i]);
  return out;
}

}  // namespace rsd
