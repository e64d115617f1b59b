#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pwrgraph
{

/*! \brief Base class of every error thrown by the toolkit. */
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief Malformed text input, carrying the 1-based position of the offending token. */
class parse_error : public error
{
public:
  parse_error( std::string const& what, std::size_t line, std::size_t col )
      : error( "line " + std::to_string( line ) + ", col " + std::to_string( col ) + ": " + what ),
        line_( line ), col_( col )
  {
  }

  std::size_t line() const noexcept { return line_; }
  std::size_t col() const noexcept { return col_; }

private:
  std::size_t line_;
  std::size_t col_;
};

/*! \brief A structure violates one of its invariants (multiple drivers, cycles, ...). */
class invariant_error : public error
{
public:
  using error::error;
};

/*! \brief Caller passed arguments outside the documented domain. */
class argument_error : public error
{
public:
  using error::error;
};

} // namespace pwrgraph
