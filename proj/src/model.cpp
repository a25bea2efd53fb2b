#include "sfda/model.hpp"

#include <cstring>
#include <fstream>

#include "sfda/errors.hpp"

namespace sfda {

std::string ArchConfig::fingerprint() const {
  return "cnn3." + std::to_string(image_size) + "x" +
         std::to_string(image_channels) + ".w" + std::to_string(width1) + "-" +
         std::to_string(width2) + "-" + std::to_string(width3) + ".d" +
         std::to_string(feature_dim) + ".gh" + std::to_string(goal_hidden) +
         ".sh" + std::to_string(subsid_hidden);
}

namespace {

nn::Tensor3 image_to_tensor(const Image& img) {
  nn::Tensor3 t(img.channels, img.height, img.width);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) t.at(c, y, x) = img.at(y, x, c);
  return t;
}

}  // namespace

ModelBundle build_model(const ArchConfig& arch, int goal_classes,
                        int sticker_classes, std::uint64_t seed) {
  if (goal_classes < 2 || sticker_classes < 2)
    throw ConfigError("build_model: class counts must be >= 2");
  if (arch.image_size < 8 || arch.image_size % 8 != 0)
    throw ConfigError("build_model: image_size must be a multiple of 8");

  ModelBundle m;
  m.arch = arch;
  m.goal_classes = goal_classes;
  m.sticker_classes = sticker_classes;

  m.conv1.init(arch.image_channels, arch.width1, 3, 2, 1, seed, "conv1");
  m.conv2.init(arch.width1, arch.width2, 3, 2, 1, seed, "conv2");
  m.conv3.init(arch.width2, arch.width3, 3, 2, 1, seed, "conv3");
  m.proj.init(arch.width3, arch.feature_dim, seed, "proj");

  m.goal1.init(arch.feature_dim, arch.goal_hidden, seed, "goal1");
  m.goal2.init(arch.goal_hidden, goal_classes, seed, "goal2");

  // Subsidiary head taps the penultimate block: width2 x (s/4) x (s/4),
  // average-pooled once before the MLP.
  int tap = arch.image_size / 4 / 2;
  m.sub1.init(arch.width2 * tap * tap, arch.subsid_hidden, seed, "sub1");
  m.sub2.init(arch.subsid_hidden, sticker_classes + 1, seed, "sub2");
  return m;
}

nn::Vec ModelBundle::forward_features(const Image& img, Fwd& f) const {
  nn::Tensor3 x0 = image_to_tensor(img);
  f.a1 = nn::relu(conv1.forward(x0, f.c1), f.r1);
  f.a2 = nn::relu(conv2.forward(f.a1, f.c2), f.r2);
  f.tap_h = f.a2.h;
  f.tap_w = f.a2.w;
  f.a3 = nn::relu(conv3.forward(f.a2, f.c3), f.r3);
  f.pooled = nn::global_avgpool(f.a3);
  f.z = proj.forward(f.pooled, f.projc);
  if (!f.z.allFinite())
    throw NumericError("non-finite backbone feature");
  return f.z;
}

nn::Vec ModelBundle::forward_goal(const Image& img, Fwd& f) const {
  if (f.z.size() == 0) forward_features(img, f);
  nn::Vec h1 = nn::relu(goal1.forward(f.z, f.g1c), f.rg);
  f.goal_logits = goal2.forward(h1, f.g2c);
  if (!f.goal_logits.allFinite()) throw NumericError("non-finite goal logits");
  return f.goal_logits;
}

nn::Vec ModelBundle::forward_subsidiary(const Image& img, Fwd& f) const {
  if (f.a2.data.size() == 0) {
    nn::Tensor3 x0 = image_to_tensor(img);
    f.a1 = nn::relu(conv1.forward(x0, f.c1), f.r1);
    f.a2 = nn::relu(conv2.forward(f.a1, f.c2), f.r2);
    f.tap_h = f.a2.h;
    f.tap_w = f.a2.w;
  }
  nn::Tensor3 pooled = nn::avgpool2(f.a2);
  // Tap activations are nonnegative, so a plain relu here can die for
  // every input at once under the two-loss round-robin; keep it leaky.
  nn::Vec h1 = nn::leaky_relu(sub1.forward(pooled.data, f.n1c), f.rn);
  f.sub_logits = sub2.forward(h1, f.n2c);
  if (!f.sub_logits.allFinite())
    throw NumericError("non-finite subsidiary logits");
  return f.sub_logits;
}

void ModelBundle::forward_all(const Image& img, Fwd& f) const {
  forward_goal(img, f);
  forward_subsidiary(img, f);
}

void ModelBundle::backward_goal(const Fwd& f, const nn::Vec& dlogits) {
  nn::Vec dh1 = goal2.backward(dlogits, f.g2c);
  nn::Vec dz = goal1.backward(nn::relu_backward(dh1, f.rg), f.g1c);
  backward_from_feature(f, dz);
}

void ModelBundle::backward_from_feature(const Fwd& f, const nn::Vec& dz) {
  nn::Vec dpooled = proj.backward(dz, f.projc);
  nn::Tensor3 da3 =
      nn::global_avgpool_backward(dpooled, f.a3.c, f.a3.h, f.a3.w);
  nn::Tensor3 da2 = conv3.backward(
      nn::relu_backward_t(da3, f.r3, f.a3.c, f.a3.h, f.a3.w), f.c3);
  nn::Tensor3 da1 = conv2.backward(
      nn::relu_backward_t(da2, f.r2, f.a2.c, f.a2.h, f.a2.w), f.c2);
  conv1.backward(nn::relu_backward_t(da1, f.r1, f.a1.c, f.a1.h, f.a1.w),
                 f.c1);
}

void ModelBundle::backward_subsidiary(const Fwd& f, const nn::Vec& dlogits) {
  nn::Vec dh1 = sub2.backward(dlogits, f.n2c);
  nn::Vec dpooled_flat = sub1.backward(nn::relu_backward(dh1, f.rn), f.n1c);
  nn::Tensor3 dpooled(f.a2.c, f.tap_h / 2, f.tap_w / 2);
  dpooled.data = dpooled_flat;
  nn::Tensor3 da2 = nn::avgpool2_backward(dpooled, f.tap_h, f.tap_w);
  nn::Tensor3 da1 = conv2.backward(
      nn::relu_backward_t(da2, f.r2, f.a2.c, f.a2.h, f.a2.w), f.c2);
  conv1.backward(nn::relu_backward_t(da1, f.r1, f.a1.c, f.a1.h, f.a1.w),
                 f.c1);
}

std::vector<nn::Param*> ModelBundle::params(Component c) {
  switch (c) {
    case Component::Backbone:
      return {&conv1.weight, &conv1.bias, &conv2.weight, &conv2.bias,
              &conv3.weight, &conv3.bias, &proj.weight,  &proj.bias};
    case Component::GoalHead:
      return {&goal1.weight, &goal1.bias, &goal2.weight, &goal2.bias};
    default:
      return {&sub1.weight, &sub1.bias, &sub2.weight, &sub2.bias};
  }
}

std::vector<nn::Param*> ModelBundle::all_params() {
  std::vector<nn::Param*> out;
  for (Component c :
       {Component::Backbone, Component::GoalHead, Component::SubsidiaryHead})
    for (nn::Param* p : params(c)) out.push_back(p);
  return out;
}

void ModelBundle::zero_grad() {
  for (nn::Param* p : all_params()) p->zero_grad();
}

void ModelBundle::set_frozen(Component c, bool frozen) {
  for (nn::Param* p : params(c)) p->frozen = frozen;
}

bool ModelBundle::is_frozen(Component c) const {
  auto* self = const_cast<ModelBundle*>(this);
  for (nn::Param* p : self->params(c))
    if (!p->frozen) return false;
  return true;
}

std::uint64_t ModelBundle::component_checksum(Component c) const {
  auto* self = const_cast<ModelBundle*>(this);
  std::vector<const nn::Param*> ps;
  for (nn::Param* p : self->params(c)) ps.push_back(p);
  return nn::checksum(ps);
}

// ---------------------------------------------------------------------------
// Checkpoint format: magic, version, fingerprint, phase tag, class counts,
// then raw little-endian doubles per parameter block.

namespace {
constexpr char kMagic[8] = {'S', 'F', 'D', 'A', 'C', 'K', 'P', '1'};

void write_string(std::ofstream& out, const std::string& s) {
  std::uint32_t n = static_cast<std::uint32_t>(s.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(s.data(), n);
}

std::string read_string(std::ifstream& in) {
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n > (1u << 20)) throw CheckpointError("corrupt checkpoint string");
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}
}  // namespace

void save_checkpoint(const ModelBundle& m, const std::string& phase_tag,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_string(out, m.arch.fingerprint());
  write_string(out, phase_tag);
  std::int32_t classes[2] = {m.goal_classes, m.sticker_classes};
  out.write(reinterpret_cast<const char*>(classes), sizeof(classes));
  auto* self = const_cast<ModelBundle*>(&m);
  for (nn::Param* p : self->all_params()) {
    std::uint64_t n = static_cast<std::uint64_t>(p->w.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(p->w.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!out) throw CheckpointError("short write on checkpoint: " + path);
}

std::string load_checkpoint(ModelBundle& m, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad checkpoint magic in " + path);
  std::string fp = read_string(in);
  if (fp != m.arch.fingerprint())
    throw CheckpointError("config fingerprint mismatch: checkpoint has '" +
                          fp + "', model expects '" + m.arch.fingerprint() +
                          "'");
  std::string phase = read_string(in);
  std::int32_t classes[2];
  in.read(reinterpret_cast<char*>(classes), sizeof(classes));
  if (classes[0] != m.goal_classes || classes[1] != m.sticker_classes)
    throw CheckpointError("class-count mismatch loading " + path);
  for (nn::Param* p : m.all_params()) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n != static_cast<std::uint64_t>(p->w.size()))
      throw CheckpointError("parameter-block size mismatch loading " + path);
    in.read(reinterpret_cast<char*>(p->w.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  }
  if (!in) throw CheckpointError("truncated checkpoint: " + path);
  return phase;
}

std::string peek_checkpoint_phase(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("missing checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("bad checkpoint magic in " + path);
  read_string(in);  // fingerprint
  return read_string(in);
}

}  // namespace sfda
