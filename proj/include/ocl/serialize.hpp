#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ocl/paramset.hpp"
#include "ocl/stream.hpp"

namespace ocl {

// Archive container: a flat little-endian payload file plus a plain-text
// manifest. Manifest format, one record per line after the two header lines:
//
//   oclbin 1
//   records <N>
//   <name> <kind:f64|i64> <ndim> <dims...> <byte_offset> <elem_count> <attrs|->
//
// attrs is a comma-separated k=v list. Names must not contain whitespace.
class BinWriter {
 public:
  void add_f64(const std::string& name, const std::vector<int>& shape,
               const double* values, size_t count,
               const std::map<std::string, std::string>& attrs = {});
  void add_i64(const std::string& name, const std::vector<int>& shape,
               const int64_t* values, size_t count,
               const std::map<std::string, std::string>& attrs = {});
  void add_tensor(const std::string& name, const Tensor& t,
                  const std::map<std::string, std::string>& attrs = {});
  // writes <base>.bin and <base>.manifest
  void write(const std::string& base_path) const;

 private:
  struct Record {
    std::string name;
    char kind;
    std::vector<int> shape;
    uint64_t offset;
    uint64_t count;
    std::map<std::string, std::string> attrs;
  };
  std::vector<Record> records_;
  std::vector<char> payload_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& base_path);

  struct Record {
    std::string name;
    char kind;
    std::vector<int> shape;
    uint64_t offset;
    uint64_t count;
    std::map<std::string, std::string> attrs;
  };

  const std::vector<Record>& records() const { return records_; }
  const Record* find(const std::string& name) const;
  std::vector<double> read_f64(const Record& r) const;
  std::vector<int64_t> read_i64(const Record& r) const;
  Tensor read_tensor(const Record& r) const;

 private:
  std::vector<Record> records_;
  std::vector<char> payload_;
};

// ParamSets are stored one record per entry under <prefix>/<entry name> with
// group/norm attributes, order preserved by manifest order.
void save_paramset(BinWriter& w, const std::string& prefix, const ParamSet& p);
ParamSet load_paramset(const BinReader& r, const std::string& prefix);

// Learner checkpoint: inference params, optionally the adapted model and the
// (F_seen, W_seen, step) counters.
struct Checkpoint {
  ParamSet final_model;
  bool has_adapted = false;
  ParamSet adapted;
  long long F_seen = 0, W_seen = 0, step = 0;
};

void save_checkpoint(const std::string& base_path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& base_path);

// Dataset archive: every utterance's frames and targets plus task/speaker
// attributes, keyed by split.
struct DatasetArchive {
  InitialData initial;
  std::vector<Batch> stream;
  std::map<int, std::vector<Utterance>> eval;
};

void export_dataset(const std::string& base_path, const DatasetArchive& d);
DatasetArchive import_dataset(const std::string& base_path);

}  // namespace ocl
