#pragma once

#include <string>

#include "ocl/paramset.hpp"
#include "ocl/stream.hpp"

namespace ocl {

// Common step interface for all learners. A learner consumes each batch once,
// in stream order; the harness never hands it task or speaker identities.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual void step(const LearnerBatch& batch) = 0;
  virtual const ParamSet& inference_params() const = 0;
  virtual std::string name() const = 0;
};

}  // namespace ocl
