#include "ocl/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "archive format is little-endian");

namespace ocl {

namespace {

void check_name(const std::string& name) {
  OCL_CHECK(!name.empty() && name.find_first_of(" \t\n") == std::string::npos, IoError,
            "record name must be non-empty and whitespace-free: '" << name << "'");
}

std::string attrs_to_string(const std::map<std::string, std::string>& attrs) {
  if (attrs.empty()) return "-";
  std::string out;
  for (const auto& [k, v] : attrs) {
    if (!out.empty()) out += ',';
    out += k + "=" + v;
  }
  return out;
}

std::map<std::string, std::string> attrs_from_string(const std::string& s) {
  std::map<std::string, std::string> attrs;
  if (s == "-") return attrs;
  std::stringstream ss(s);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    const size_t eq = kv.find('=');
    OCL_CHECK(eq != std::string::npos, IoError, "bad attribute: " << kv);
    attrs[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return attrs;
}

}  // namespace

void BinWriter::add_f64(const std::string& name, const std::vector<int>& shape,
                        const double* values, size_t count,
                        const std::map<std::string, std::string>& attrs) {
  check_name(name);
  Record r{name, 'f', shape, payload_.size(), count, attrs};
  records_.push_back(std::move(r));
  const size_t bytes = count * sizeof(double);
  const size_t off = payload_.size();
  payload_.resize(off + bytes);
  std::memcpy(payload_.data() + off, values, bytes);
}

void BinWriter::add_i64(const std::string& name, const std::vector<int>& shape,
                        const int64_t* values, size_t count,
                        const std::map<std::string, std::string>& attrs) {
  check_name(name);
  Record r{name, 'i', shape, payload_.size(), count, attrs};
  records_.push_back(std::move(r));
  const size_t bytes = count * sizeof(int64_t);
  const size_t off = payload_.size();
  payload_.resize(off + bytes);
  std::memcpy(payload_.data() + off, values, bytes);
}

void BinWriter::add_tensor(const std::string& name, const Tensor& t,
                           const std::map<std::string, std::string>& attrs) {
  add_f64(name, t.shape, t.data.data(), t.data.size(), attrs);
}

void BinWriter::write(const std::string& base_path) const {
  std::ofstream bin(base_path + ".bin", std::ios::binary);
  OCL_CHECK(bin.good(), IoError, "cannot open " << base_path << ".bin for writing");
  bin.write(payload_.data(), static_cast<std::streamsize>(payload_.size()));
  OCL_CHECK(bin.good(), IoError, "short write to " << base_path << ".bin");
  bin.close();

  std::ofstream man(base_path + ".manifest");
  OCL_CHECK(man.good(), IoError, "cannot open " << base_path << ".manifest for writing");
  man << "oclbin 1\n";
  man << "records " << records_.size() << "\n";
  for (const Record& r : records_) {
    man << r.name << ' ' << (r.kind == 'f' ? "f64" : "i64") << ' ' << r.shape.size();
    for (int d : r.shape) man << ' ' << d;
    man << ' ' << r.offset << ' ' << r.count << ' ' << attrs_to_string(r.attrs) << "\n";
  }
  OCL_CHECK(man.good(), IoError, "short write to " << base_path << ".manifest");
}

BinReader::BinReader(const std::string& base_path) {
  std::ifstream man(base_path + ".manifest");
  OCL_CHECK(man.good(), IoError, "cannot open " << base_path << ".manifest");
  std::string magic;
  int version = 0;
  man >> magic >> version;
  OCL_CHECK(magic == "oclbin" && version == 1, IoError,
            "bad manifest header in " << base_path << ".manifest");
  std::string records_word;
  size_t n = 0;
  man >> records_word >> n;
  OCL_CHECK(records_word == "records", IoError, "bad manifest header");
  records_.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    Record r;
    std::string kind, attrs;
    int ndim = 0;
    man >> r.name >> kind >> ndim;
    OCL_CHECK(man.good() && (kind == "f64" || kind == "i64") && ndim >= 0, IoError,
              "bad manifest record " << i);
    r.kind = kind == "f64" ? 'f' : 'i';
    r.shape.resize(ndim);
    for (int d = 0; d < ndim; ++d) man >> r.shape[d];
    man >> r.offset >> r.count >> attrs;
    OCL_CHECK(man.good(), IoError, "truncated manifest record " << i);
    r.attrs = attrs_from_string(attrs);
    records_.push_back(std::move(r));
  }

  std::ifstream bin(base_path + ".bin", std::ios::binary | std::ios::ate);
  OCL_CHECK(bin.good(), IoError, "cannot open " << base_path << ".bin");
  const std::streamsize size = bin.tellg();
  bin.seekg(0);
  payload_.resize(static_cast<size_t>(size));
  bin.read(payload_.data(), size);
  OCL_CHECK(bin.good(), IoError, "short read from " << base_path << ".bin");
  for (const Record& r : records_) {
    const size_t width = r.kind == 'f' ? sizeof(double) : sizeof(int64_t);
    OCL_CHECK(r.offset + r.count * width <= payload_.size(), IoError,
              "record " << r.name << " exceeds payload size");
  }
}

const BinReader::Record* BinReader::find(const std::string& name) const {
  for (const Record& r : records_)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<double> BinReader::read_f64(const Record& r) const {
  OCL_CHECK(r.kind == 'f', IoError, "record " << r.name << " is not f64");
  std::vector<double> out(r.count);
  std::memcpy(out.data(), payload_.data() + r.offset, r.count * sizeof(double));
  return out;
}

std::vector<int64_t> BinReader::read_i64(const Record& r) const {
  OCL_CHECK(r.kind == 'i', IoError, "record " << r.name << " is not i64");
  std::vector<int64_t> out(r.count);
  std::memcpy(out.data(), payload_.data() + r.offset, r.count * sizeof(int64_t));
  return out;
}

Tensor BinReader::read_tensor(const Record& r) const {
  return Tensor(r.shape, read_f64(r));
}

void save_paramset(BinWriter& w, const std::string& prefix, const ParamSet& p) {
  for (const ParamEntry& e : p) {
    w.add_tensor(prefix + "/" + e.name, e.value,
                 {{"group", e.group == Group::encoder ? "encoder" : "decoder"},
                  {"norm", e.norm_flag ? "1" : "0"}});
  }
}

ParamSet load_paramset(const BinReader& r, const std::string& prefix) {
  ParamSet p;
  const std::string pre = prefix + "/";
  for (const auto& rec : r.records()) {
    if (rec.name.rfind(pre, 0) != 0) continue;
    const auto group_it = rec.attrs.find("group");
    const auto norm_it = rec.attrs.find("norm");
    OCL_CHECK(group_it != rec.attrs.end() && norm_it != rec.attrs.end(), IoError,
              "parameter record " << rec.name << " lacks group/norm attributes");
    p.add(rec.name.substr(pre.size()), r.read_tensor(rec),
          group_it->second == "decoder" ? Group::decoder : Group::encoder,
          norm_it->second == "1");
  }
  OCL_CHECK(!p.empty(), IoError, "no parameters found under prefix " << prefix);
  return p;
}

void save_checkpoint(const std::string& base_path, const Checkpoint& ck) {
  BinWriter w;
  save_paramset(w, "final", ck.final_model);
  if (ck.has_adapted) save_paramset(w, "adapted", ck.adapted);
  const int64_t counters[3] = {ck.F_seen, ck.W_seen, ck.step};
  w.add_i64("counters", {3}, counters, 3);
  w.write(base_path);
}

Checkpoint load_checkpoint(const std::string& base_path) {
  BinReader r(base_path);
  Checkpoint ck;
  ck.final_model = load_paramset(r, "final");
  if (r.find("adapted/" + ck.final_model[0].name)) {
    ck.adapted = load_paramset(r, "adapted");
    ck.has_adapted = true;
  }
  const auto* counters = r.find("counters");
  OCL_CHECK(counters, IoError, "checkpoint lacks counters record");
  const std::vector<int64_t> c = r.read_i64(*counters);
  OCL_CHECK(c.size() == 3, IoError, "checkpoint counters must hold 3 values");
  ck.F_seen = c[0];
  ck.W_seen = c[1];
  ck.step = c[2];
  return ck;
}

namespace {

void add_utterance(BinWriter& w, const std::string& key, const Utterance& u) {
  std::map<std::string, std::string> attrs{{"task", std::to_string(u.task_id)},
                                           {"speaker", std::to_string(u.speaker_id)}};
  w.add_tensor(key + "/frames", u.frames, attrs);
  std::vector<int64_t> t(u.targets.begin(), u.targets.end());
  w.add_i64(key + "/targets", {static_cast<int>(t.size())}, t.data(), t.size(), attrs);
}

void add_set(BinWriter& w, const std::string& split, const std::vector<Utterance>& set) {
  for (size_t i = 0; i < set.size(); ++i)
    add_utterance(w, split + "/u" + std::to_string(i), set[i]);
}

std::vector<Utterance> load_set(const BinReader& r, const std::string& split) {
  std::vector<Utterance> out;
  for (size_t i = 0;; ++i) {
    const std::string key = split + "/u" + std::to_string(i);
    const auto* frames = r.find(key + "/frames");
    if (!frames) break;
    const auto* targets = r.find(key + "/targets");
    OCL_CHECK(targets, IoError, "dataset record " << key << " lacks targets");
    Utterance u;
    u.frames = r.read_tensor(*frames);
    for (int64_t t : r.read_i64(*targets)) u.targets.push_back(static_cast<int>(t));
    u.task_id = std::stoi(frames->attrs.at("task"));
    u.speaker_id = std::stoi(frames->attrs.at("speaker"));
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace

void export_dataset(const std::string& base_path, const DatasetArchive& d) {
  BinWriter w;
  add_set(w, "train", d.initial.train);
  add_set(w, "val", d.initial.val);
  add_set(w, "test", d.initial.test);
  const int64_t counters[2] = {d.initial.F0, d.initial.W0};
  w.add_i64("initial/counters", {2}, counters, 2);
  for (size_t b = 0; b < d.stream.size(); ++b)
    add_set(w, "stream/b" + std::to_string(b), d.stream[b].utts);
  for (const auto& [task, set] : d.eval) add_set(w, "eval/t" + std::to_string(task), set);
  w.write(base_path);
}

DatasetArchive import_dataset(const std::string& base_path) {
  BinReader r(base_path);
  DatasetArchive d;
  d.initial.train = load_set(r, "train");
  d.initial.val = load_set(r, "val");
  d.initial.test = load_set(r, "test");
  const auto* counters = r.find("initial/counters");
  OCL_CHECK(counters, IoError, "dataset archive lacks initial counters");
  const std::vector<int64_t> c = r.read_i64(*counters);
  d.initial.F0 = c.at(0);
  d.initial.W0 = c.at(1);
  for (size_t b = 0;; ++b) {
    std::vector<Utterance> utts = load_set(r, "stream/b" + std::to_string(b));
    if (utts.empty()) break;
    Batch batch;
    for (Utterance& u : utts) {
      batch.frames_total += u.frames.rows();
      batch.tokens_total += static_cast<long long>(u.targets.size());
      batch.task_id = u.task_id;
      batch.speaker_id = u.speaker_id;
      batch.utts.push_back(std::move(u));
    }
    d.stream.push_back(std::move(batch));
  }
  for (int task = 0;; ++task) {
    std::vector<Utterance> set = load_set(r, "eval/t" + std::to_string(task));
    if (set.empty()) break;
    d.eval[task] = std::move(set);
  }
  return d;
}

}  // namespace ocl
