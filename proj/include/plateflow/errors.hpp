#pragma once

#include <stdexcept>
#include <string>

namespace plateflow {

/// Invalid obstacle-problem data.
class ProblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The obstacle is not strictly negative on the boundary.
class BoundarySignError : public ProblemError {
public:
    using ProblemError::ProblemError;
};

/// A state lies below the obstacle.
class ObstacleViolation : public ProblemError {
public:
    using ProblemError::ProblemError;
};

class NonFiniteError : public ProblemError {
public:
    using ProblemError::ProblemError;
};

/// Base for failures inside a step or elliptic solve.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoConvergence : public SolverError {
public:
    NoConvergence(const std::string& what, long iterations)
        : SolverError(what), iterations_(iterations) {}
    long iterations() const { return iterations_; }

private:
    long iterations_;
};

/// G(u) > G(u_prev) after a step solve; indicates a solver defect.
class DescentViolation : public SolverError {
public:
    using SolverError::SolverError;
};

/// A solver error raised while computing step `index` of a trajectory.
class StepFailure : public SolverError {
public:
    StepFailure(long index, const std::string& what)
        : SolverError("step " + std::to_string(index) + ": " + what), index_(index) {}
    long index() const { return index_; }

private:
    long index_;
};

}  // namespace plateflow
