#pragma once

#include <stdexcept>
#include <string>

namespace wildstokes {

// Contract errors are precondition/input violations; numeric errors are
// runtime failures of an otherwise well-posed computation (divergence,
// resonance, quadrature breakdown).  The CLI maps them to exit codes 2 and 3.
enum class ErrorKind { contract, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ZeroLeadingCoefficient : Error {
    explicit ZeroLeadingCoefficient(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct BranchAmbiguity : Error {
    explicit BranchAmbiguity(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct IdenticalExponents : Error {
    explicit IdenticalExponents(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct ZeroInput : Error {
    explicit ZeroInput(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct RamifiedInput : Error {
    explicit RamifiedInput(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct Obstructed : Error {
    explicit Obstructed(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct NotUnitriangular : Error {
    explicit NotUnitriangular(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct UnsortedExponents : Error {
    explicit UnsortedExponents(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct TruncationBoundary : Error {
    explicit TruncationBoundary(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct GridOutsideQuadrant : Error {
    explicit GridOutsideQuadrant(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct KernelPoleProximity : Error {
    explicit KernelPoleProximity(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct PoleAt : Error {
    explicit PoleAt(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(ErrorKind::contract, msg) {}
};

struct NonInvertible : Error {
    explicit NonInvertible(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct SingularPrincipalMinor : Error {
    SingularPrincipalMinor(int index, const std::string& msg)
        : Error(ErrorKind::numeric, msg), index(index) {}
    int index;
};

struct ResonantOrder : Error {
    ResonantOrder(long order, const std::string& msg) : Error(ErrorKind::numeric, msg), order(order) {}
    long order;
};

struct NormalizationFailed : Error {
    explicit NormalizationFailed(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct Divergent : Error {
    explicit Divergent(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct MaxTermsExceeded : Error {
    explicit MaxTermsExceeded(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct RayTruncationTooLow : Error {
    explicit RayTruncationTooLow(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct QuadratureFailure : Error {
    explicit QuadratureFailure(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct EvaluationFailure : Error {
    explicit EvaluationFailure(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

struct IllConditionedFit : Error {
    explicit IllConditionedFit(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

} // namespace wildstokes
