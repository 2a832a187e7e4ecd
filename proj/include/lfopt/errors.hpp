#pragma once

#include <stdexcept>
#include <string>

namespace lfopt {

// Base class for all recoverable errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define LFOPT_DEFINE_ERROR(Name)                                      \
    struct Name : Error {                                             \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

// graph-core
LFOPT_DEFINE_ERROR(ParseError);
LFOPT_DEFINE_ERROR(CycleError);
LFOPT_DEFINE_ERROR(DanglingEdge);
LFOPT_DEFINE_ERROR(BadShape);
LFOPT_DEFINE_ERROR(UnknownNode);
LFOPT_DEFINE_ERROR(EmptySubset);
LFOPT_DEFINE_ERROR(UnsupportedArch);

// cost-model
LFOPT_DEFINE_ERROR(EmptyGroup);
LFOPT_DEFINE_ERROR(DisconnectedGroup);
LFOPT_DEFINE_ERROR(MalformedPlan);

// cutset
LFOPT_DEFINE_ERROR(NotInternalEdge);
LFOPT_DEFINE_ERROR(NoSolutions);
LFOPT_DEFINE_ERROR(StaleSolution);

// splitter
LFOPT_DEFINE_ERROR(Unsplittable);
LFOPT_DEFINE_ERROR(DepthExceeded);

// search
LFOPT_DEFINE_ERROR(Immutable);
LFOPT_DEFINE_ERROR(Unrectifiable);
LFOPT_DEFINE_ERROR(BudgetExhaustedNoValid);

// surrogate / explain
LFOPT_DEFINE_ERROR(DimensionMismatch);
LFOPT_DEFINE_ERROR(DegenerateDataset);
LFOPT_DEFINE_ERROR(NoInternalEdges);
LFOPT_DEFINE_ERROR(NonFinite);

#undef LFOPT_DEFINE_ERROR

} // namespace lfopt
