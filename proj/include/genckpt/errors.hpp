#pragma once

#include <stdexcept>
#include <string>

namespace genckpt {

// Base class for all recoverable framework errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define GENCKPT_DEFINE_ERROR(Name)                          \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what) : Error(what) {} \
  }

// store
GENCKPT_DEFINE_ERROR(StorageError);
GENCKPT_DEFINE_ERROR(StaleGeneration);
GENCKPT_DEFINE_ERROR(DuplicateStaging);
GENCKPT_DEFINE_ERROR(DuplicateImage);
GENCKPT_DEFINE_ERROR(DuplicatePrecious);
GENCKPT_DEFINE_ERROR(IncompleteGeneration);
GENCKPT_DEFINE_ERROR(CorruptImage);
GENCKPT_DEFINE_ERROR(NotFound);

// agent
GENCKPT_DEFINE_ERROR(FdExhaustion);
GENCKPT_DEFINE_ERROR(SnapshotRace);
GENCKPT_DEFINE_ERROR(ImageFormatError);

// precious
GENCKPT_DEFINE_ERROR(DeleteError);
GENCKPT_DEFINE_ERROR(CollectError);

// scheduler
GENCKPT_DEFINE_ERROR(TelemetryError);
GENCKPT_DEFINE_ERROR(ModelError);

// coordinator
GENCKPT_DEFINE_ERROR(Busy);
GENCKPT_DEFINE_ERROR(RestoreRefused);
GENCKPT_DEFINE_ERROR(ProtocolError);

// simworkload / faultharness
GENCKPT_DEFINE_ERROR(UnknownPreset);
GENCKPT_DEFINE_ERROR(HarnessError);

#undef GENCKPT_DEFINE_ERROR

// Thrown by fault-injection hooks to terminate a trial at the injection
// point. Deliberately not derived from Error: nothing in the protocol
// path may catch and absorb it.
class InjectedCrash {
 public:
  explicit InjectedCrash(std::string point) : point_(std::move(point)) {}
  const std::string& point() const { return point_; }

 private:
  std::string point_;
};

}  // namespace genckpt
