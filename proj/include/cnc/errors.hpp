#pragma once

#include <stdexcept>
#include <string>

namespace cnc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define CNC_DEFINE_ERROR(Name)                   \
    class Name : public Error {                  \
    public:                                      \
        using Error::Error;                      \
    }

CNC_DEFINE_ERROR(FormatError);
CNC_DEFINE_ERROR(ParseError);
CNC_DEFINE_ERROR(MissingDataError);
CNC_DEFINE_ERROR(EmptyPlanError);
CNC_DEFINE_ERROR(DuplicateSeriesError);
CNC_DEFINE_ERROR(ShapeError);
CNC_DEFINE_ERROR(RankError);
CNC_DEFINE_ERROR(ClusterCountError);
CNC_DEFINE_ERROR(WeightError);
CNC_DEFINE_ERROR(SingularDesignError);
CNC_DEFINE_ERROR(ArgumentError);
CNC_DEFINE_ERROR(VersionError);

#undef CNC_DEFINE_ERROR

/// Wraps an error raised inside one pipeline stage so callers can tell where it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace cnc
