// Copyright 2026 The dxsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace dxsim {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A contract precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Malformed document (JSON, case document, judge score document).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Lookup of an identifier that does not exist.
class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Knowledge base ----------------------------------------------------------

class DanglingReferenceError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyGraphError : public Error {
 public:
  using Error::Error;
};

// Case generation ---------------------------------------------------------

class MissingSectionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class ForbiddenSectionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class SymptomEntryError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// generate_case exhausted its regeneration budget.
class CaseValidationError : public Error {
 public:
  using Error::Error;
};

// Dialogue protocol -------------------------------------------------------

enum class ProtocolErrorKind {
  kNoAction,
  kMultipleActions,
  kEmptyPayload,
  kUnknownMarker,
  kUnterminatedMarker,
  kNoFindings,
  kHistoryNotOpened,
  kMissingSlot,
};

class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  ProtocolErrorKind kind() const noexcept { return kind_; }

 private:
  ProtocolErrorKind kind_;
};

// Backends ----------------------------------------------------------------

/// Transport failure, non-retryable HTTP status, or retries exhausted.
class BackendError : public Error {
 public:
  using Error::Error;
};

class CredentialError : public BackendError {
 public:
  using BackendError::BackendError;
};

class EmptyCompletionError : public BackendError {
 public:
  using BackendError::BackendError;
};

class ScriptExhaustedError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Judging -----------------------------------------------------------------

class BoundViolationError : public ParseError {
 public:
  using ParseError::ParseError;
};

class MissingFieldError : public ParseError {
 public:
  using ParseError::ParseError;
};

class PanelFailureError : public Error {
 public:
  using Error::Error;
};

}  // namespace dxsim
