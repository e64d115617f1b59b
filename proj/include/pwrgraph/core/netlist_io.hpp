#pragma once

#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "../util/strings.hpp"
#include "topology.hpp"
#include "types.hpp"

namespace pwrgraph
{

/*! \file netlist_io.hpp
 *  \brief Structural netlist subset: reader, elaborator and hierarchical writer.
 *
 * Accepted grammar:
 * \verbatim
 * file   := { [attrs] module }
 * module := 'module' ID '(' [ID {',' ID}] ')' ';' { item } 'endmodule'
 * item   := [attrs] ('input' | 'output' | 'wire') [range] ID {',' ID} ';'
 *         | ID ID '(' [ '.' ID '(' [netref] ')' {',' ...} ] ')' ';'
 * range  := '[' NUM ':' NUM ']'              -- expands a[3:0] to a_3 .. a_0
 * netref := ID [ '[' NUM ']' ]               -- a[2] names a_2
 * attrs  := '(*' ID ['=' (STRING|NUM)] {',' ...} '*)'
 * \endverbatim
 *
 * Recognised attributes: `stage = "G" | "G_PLUS" | "P"` on the top module,
 * `clock_root` on a top-level input, `wire_cap = "<fF>"` on a net declaration.
 * The top module is the unique module that is never instantiated.
 */

namespace detail
{

enum class vtok_kind
{
  ident,
  number,
  string,
  punct,
  attr_open,
  attr_close,
  eof
};

struct vtok
{
  vtok_kind kind;
  std::string text;
  std::size_t line, col;
};

inline std::vector<vtok> lex_verilog( std::string_view src )
{
  std::vector<vtok> out;
  std::size_t i = 0, line = 1, col = 1;
  auto adv = [&]( std::size_t k = 1 ) {
    while ( k-- && i < src.size() )
    {
      if ( src[i] == '\n' )
      {
        ++line;
        col = 1;
      }
      else
        ++col;
      ++i;
    }
  };
  while ( i < src.size() )
  {
    char const c = src[i];
    if ( std::isspace( static_cast<unsigned char>( c ) ) )
    {
      adv();
      continue;
    }
    if ( c == '/' && i + 1 < src.size() && src[i + 1] == '/' )
    {
      while ( i < src.size() && src[i] != '\n' )
        adv();
      continue;
    }
    if ( c == '/' && i + 1 < src.size() && src[i + 1] == '*' )
    {
      auto const l = line, cl = col;
      adv( 2 );
      while ( i + 1 < src.size() && !( src[i] == '*' && src[i + 1] == '/' ) )
        adv();
      if ( i + 1 >= src.size() )
        throw parse_error( "unterminated block comment", l, cl );
      adv( 2 );
      continue;
    }
    auto const l = line, cl = col;
    if ( c == '(' && i + 1 < src.size() && src[i + 1] == '*' )
    {
      out.push_back( { vtok_kind::attr_open, "(*", l, cl } );
      adv( 2 );
      continue;
    }
    if ( c == '*' && i + 1 < src.size() && src[i + 1] == ')' )
    {
      out.push_back( { vtok_kind::attr_close, "*)", l, cl } );
      adv( 2 );
      continue;
    }
    if ( std::isalpha( static_cast<unsigned char>( c ) ) || c == '_' )
    {
      auto const start = i;
      while ( i < src.size() &&
              ( std::isalnum( static_cast<unsigned char>( src[i] ) ) || src[i] == '_' || src[i] == '$' ) )
        adv();
      out.push_back( { vtok_kind::ident, std::string( src.substr( start, i - start ) ), l, cl } );
      continue;
    }
    if ( std::isdigit( static_cast<unsigned char>( c ) ) || ( c == '-' && i + 1 < src.size() && std::isdigit( static_cast<unsigned char>( src[i + 1] ) ) ) )
    {
      auto const start = i;
      adv();
      while ( i < src.size() && ( std::isalnum( static_cast<unsigned char>( src[i] ) ) || src[i] == '.' ||
                                  ( ( src[i] == '-' || src[i] == '+' ) && ( src[i - 1] == 'e' || src[i - 1] == 'E' ) ) ) )
        adv();
      out.push_back( { vtok_kind::number, std::string( src.substr( start, i - start ) ), l, cl } );
      continue;
    }
    if ( c == '"' )
    {
      adv();
      auto const start = i;
      while ( i < src.size() && src[i] != '"' && src[i] != '\n' )
        adv();
      if ( i >= src.size() || src[i] != '"' )
        throw parse_error( "unterminated string", l, cl );
      out.push_back( { vtok_kind::string, std::string( src.substr( start, i - start ) ), l, cl } );
      adv();
      continue;
    }
    if ( std::string_view( "();,.[]:=" ).find( c ) != std::string_view::npos )
    {
      out.push_back( { vtok_kind::punct, std::string( 1, c ), l, cl } );
      adv();
      continue;
    }
    throw parse_error( std::string( "unexpected character '" ) + c + "'", l, cl );
  }
  out.push_back( { vtok_kind::eof, "", line, col } );
  return out;
}

struct vpos
{
  std::size_t line{ 0 }, col{ 0 };
};

struct vattr
{
  std::string name, value;
};

struct vconn
{
  std::string pin;
  std::optional<std::string> net; // expanded scalar name; nullopt when left open
  vpos pos;
};

struct vinstance
{
  std::string type, name;
  std::vector<vconn> conns;
  vpos pos;
};

struct vdecl
{
  enum kind_t
  {
    input,
    output,
    wire
  } kind;
  std::string name;
  std::vector<vattr> attrs;
  vpos pos;
};

struct vmodule
{
  std::string name;
  std::vector<std::string> ports;
  std::vector<vattr> attrs;
  std::vector<vdecl> decls;
  std::vector<vinstance> instances;
  vpos pos;
};

class verilog_reader
{
public:
  explicit verilog_reader( std::string_view src ) : toks_( lex_verilog( src ) ) {}

  std::vector<vmodule> modules()
  {
    std::vector<vmodule> mods;
    while ( cur().kind != vtok_kind::eof )
    {
      auto attrs = attributes();
      auto m = module();
      m.attrs = std::move( attrs );
      mods.push_back( std::move( m ) );
    }
    return mods;
  }

private:
  vtok const& cur() const { return toks_[p_]; }
  parse_error fail( std::string const& msg ) const { return parse_error( msg, cur().line, cur().col ); }
  bool is_punct( char c ) const { return cur().kind == vtok_kind::punct && cur().text[0] == c; }
  void expect_punct( char c )
  {
    if ( !is_punct( c ) )
      throw fail( std::string( "expected '" ) + c + "', got '" + cur().text + "'" );
    ++p_;
  }
  std::string ident( char const* what )
  {
    if ( cur().kind != vtok_kind::ident )
      throw fail( std::string( "expected " ) + what + ", got '" + cur().text + "'" );
    return toks_[p_++].text;
  }
  long number()
  {
    long v;
    if ( cur().kind != vtok_kind::number || !parse_int( cur().text, v ) )
      throw fail( "expected an integer, got '" + cur().text + "'" );
    ++p_;
    return v;
  }

  std::vector<vattr> attributes()
  {
    std::vector<vattr> out;
    while ( cur().kind == vtok_kind::attr_open )
    {
      ++p_;
      while ( true )
      {
        vattr a;
        a.name = ident( "attribute name" );
        if ( is_punct( '=' ) )
        {
          ++p_;
          if ( cur().kind != vtok_kind::string && cur().kind != vtok_kind::number )
            throw fail( "expected attribute value" );
          a.value = toks_[p_++].text;
        }
        out.push_back( std::move( a ) );
        if ( is_punct( ',' ) )
        {
          ++p_;
          continue;
        }
        break;
      }
      if ( cur().kind != vtok_kind::attr_close )
        throw fail( "expected '*)'" );
      ++p_;
    }
    return out;
  }

  std::string netref()
  {
    auto name = ident( "net name" );
    if ( is_punct( '[' ) )
    {
      ++p_;
      auto const bit = number();
      expect_punct( ']' );
      name += "_" + std::to_string( bit );
    }
    return name;
  }

  vmodule module()
  {
    vmodule m;
    m.pos = { cur().line, cur().col };
    if ( cur().kind != vtok_kind::ident || cur().text != "module" )
      throw fail( "expected 'module', got '" + cur().text + "'" );
    ++p_;
    m.name = ident( "module name" );
    expect_punct( '(' );
    if ( !is_punct( ')' ) )
    {
      m.ports.push_back( ident( "port name" ) );
      while ( is_punct( ',' ) )
      {
        ++p_;
        m.ports.push_back( ident( "port name" ) );
      }
    }
    expect_punct( ')' );
    expect_punct( ';' );
    while ( true )
    {
      if ( cur().kind == vtok_kind::eof )
        throw fail( "missing 'endmodule'" );
      auto attrs = attributes();
      if ( cur().kind == vtok_kind::ident && cur().text == "endmodule" )
      {
        ++p_;
        break;
      }
      auto const kw = cur().text;
      if ( cur().kind == vtok_kind::ident && ( kw == "input" || kw == "output" || kw == "wire" ) )
      {
        ++p_;
        auto const kind = kw == "input" ? vdecl::input : kw == "output" ? vdecl::output : vdecl::wire;
        std::optional<std::pair<long, long>> range;
        if ( is_punct( '[' ) )
        {
          ++p_;
          auto const hi = number();
          expect_punct( ':' );
          auto const lo = number();
          expect_punct( ']' );
          range = { hi, lo };
        }
        while ( true )
        {
          vpos const pos{ cur().line, cur().col };
          auto const name = ident( "net name" );
          if ( range )
          {
            long const step = range->first >= range->second ? -1 : 1;
            std::vector<std::string> bits;
            for ( long b = range->first;; b += step )
            {
              bits.push_back( name + "_" + std::to_string( b ) );
              m.decls.push_back( { kind, bits.back(), attrs, pos } );
              if ( b == range->second )
                break;
            }
            // a bus port is listed by its base name
            if ( auto it = std::find( m.ports.begin(), m.ports.end(), name ); kind != vdecl::wire && it != m.ports.end() )
            {
              it = m.ports.erase( it );
              m.ports.insert( it, bits.begin(), bits.end() );
            }
          }
          else
            m.decls.push_back( { kind, name, attrs, pos } );
          if ( is_punct( ',' ) )
          {
            ++p_;
            continue;
          }
          break;
        }
        expect_punct( ';' );
        continue;
      }
      if ( !attrs.empty() )
        throw fail( "attributes are only allowed on declarations" );
      vinstance inst;
      inst.pos = { cur().line, cur().col };
      inst.type = ident( "cell or module type" );
      inst.name = ident( "instance name" );
      expect_punct( '(' );
      if ( !is_punct( ')' ) )
      {
        while ( true )
        {
          vconn c;
          c.pos = { cur().line, cur().col };
          if ( !is_punct( '.' ) )
            throw fail( "only named port connections (.pin(net)) are supported" );
          ++p_;
          c.pin = ident( "pin name" );
          expect_punct( '(' );
          if ( !is_punct( ')' ) )
            c.net = netref();
          expect_punct( ')' );
          inst.conns.push_back( std::move( c ) );
          if ( is_punct( ',' ) )
          {
            ++p_;
            continue;
          }
          break;
        }
      }
      expect_punct( ')' );
      expect_punct( ';' );
      m.instances.push_back( std::move( inst ) );
    }
    return m;
  }

  std::vector<vtok> toks_;
  std::size_t p_{ 0 };
};

class elaborator
{
public:
  elaborator( std::vector<vmodule> const& mods, Library const& lib ) : lib_( lib )
  {
    for ( auto const& m : mods )
    {
      if ( !defs_.emplace( m.name, &m ).second )
        throw parse_error( "module '" + m.name + "' defined twice", m.pos.line, m.pos.col );
    }
  }

  Netlist run()
  {
    std::set<std::string> instantiated;
    for ( auto const& [_, m] : defs_ )
      for ( auto const& i : m->instances )
        if ( defs_.count( i.type ) )
          instantiated.insert( i.type );
    vmodule const* top = nullptr;
    for ( auto const& [name, m] : defs_ )
      if ( !instantiated.count( name ) )
      {
        if ( top )
          throw parse_error( "multiple top-level modules ('" + top->name + "', '" + name + "')", m->pos.line,
                             m->pos.col );
        top = m;
      }
    if ( !top )
      throw parse_error( "no top-level module", 1, 1 );

    nl_.top = top->name;
    for ( auto const& a : top->attrs )
      if ( a.name == "stage" )
      {
        auto const s = stage_from_string( a.value );
        if ( !s )
          throw parse_error( "unknown stage '" + a.value + "'", top->pos.line, top->pos.col );
        nl_.stage = *s;
      }

    elaborate( *top, top->name, "", {} );

    // resolve the single-driver rule on the flattened structure
    std::vector<int> drivers( nets_.size(), 0 );
    for ( auto pi : nl_.primary_inputs )
      ++drivers[pi];
    for ( auto const& c : nl_.cells )
      if ( ++drivers[c.output_net] > 1 )
        throw parse_error( "net '" + nets_[c.output_net].name + "' is multiply driven", cell_pos_[c.id].line,
                           cell_pos_[c.id].col );

    for ( NetId i = 0; i < nets_.size(); ++i )
      nl_.nets.push_back( { i, nets_[i].name, nets_[i].wire_cap } );
    canonicalize( nl_ );
    try
    {
      validate( nl_, lib_ );
    }
    catch ( invariant_error const& e )
    {
      throw parse_error( e.what(), top->pos.line, top->pos.col );
    }
    return std::move( nl_ );
  }

private:
  struct net_info
  {
    std::string name;
    double wire_cap;
  };

  static double wire_cap_of( vdecl const& d )
  {
    for ( auto const& a : d.attrs )
      if ( a.name == "wire_cap" )
      {
        double v;
        if ( !parse_double( a.value, v ) || v < 0 )
          throw parse_error( "invalid wire_cap '" + a.value + "'", d.pos.line, d.pos.col );
        return v;
      }
    return 0.0;
  }

  NetId new_net( std::string name, double cap )
  {
    nets_.push_back( { std::move( name ), cap } );
    return static_cast<NetId>( nets_.size() - 1 );
  }

  void elaborate( vmodule const& m, std::string const& path, std::string const& rel,
                  std::map<std::string, NetId> const& bound )
  {
    if ( depth_guard_.count( m.name ) )
      throw parse_error( "recursive instantiation of module '" + m.name + "'", m.pos.line, m.pos.col );
    depth_guard_.insert( m.name );
    nl_.hierarchy.push_back( path );
    bool const is_top = rel.empty() && path == nl_.top;
    auto const qualify = [&]( std::string const& local ) { return rel.empty() ? local : rel + "." + local; };

    std::map<std::string, NetId> env;
    std::set<std::string> port_set( m.ports.begin(), m.ports.end() );
    if ( port_set.size() != m.ports.size() )
      throw parse_error( "duplicate port in module '" + m.name + "'", m.pos.line, m.pos.col );

    for ( auto const& d : m.decls )
    {
      bool const is_port_decl = d.kind != vdecl::wire;
      if ( is_port_decl && !port_set.count( d.name ) )
        throw parse_error( "'" + d.name + "' is declared " + ( d.kind == vdecl::input ? "input" : "output" ) +
                               " but is not in the port list",
                           d.pos.line, d.pos.col );
      if ( env.count( d.name ) )
      {
        if ( d.kind == vdecl::wire && port_set.count( d.name ) )
          continue; // `output y; wire y;` is legal
        throw parse_error( "net '" + d.name + "' declared twice", d.pos.line, d.pos.col );
      }
      NetId id;
      if ( auto it = bound.find( d.name ); it != bound.end() )
        id = it->second;
      else
        id = new_net( qualify( d.name ), wire_cap_of( d ) );
      env.emplace( d.name, id );
      if ( is_top )
      {
        if ( d.kind == vdecl::input )
        {
          nl_.primary_inputs.push_back( id );
          for ( auto const& a : d.attrs )
            if ( a.name == "clock_root" )
            {
              if ( nl_.clock_root )
                throw parse_error( "more than one clock_root", d.pos.line, d.pos.col );
              nl_.clock_root = id;
            }
        }
        else if ( d.kind == vdecl::output )
          nl_.primary_outputs.push_back( id );
      }
    }
    for ( auto const& p : m.ports )
      if ( !env.count( p ) )
        throw parse_error( "port '" + p + "' of module '" + m.name + "' has no direction declaration", m.pos.line,
                           m.pos.col );

    std::set<std::string> inst_names;
    for ( auto const& inst : m.instances )
    {
      if ( !inst_names.insert( inst.name ).second )
        throw parse_error( "duplicate instance name '" + inst.name + "'", inst.pos.line, inst.pos.col );
      auto resolve = [&]( vconn const& c ) -> NetId {
        auto const it = env.find( *c.net );
        if ( it == env.end() )
          throw parse_error( "dangling reference to undeclared net '" + *c.net + "'", c.pos.line, c.pos.col );
        return it->second;
      };

      if ( auto sub = defs_.find( inst.type ); sub != defs_.end() )
      {
        std::map<std::string, NetId> binding;
        std::set<std::string> sub_ports( sub->second->ports.begin(), sub->second->ports.end() );
        for ( auto const& c : inst.conns )
        {
          if ( !sub_ports.count( c.pin ) )
            throw parse_error( "module '" + inst.type + "' has no port '" + c.pin + "'", c.pos.line, c.pos.col );
          if ( !c.net )
            continue;
          if ( !binding.emplace( c.pin, resolve( c ) ).second )
            throw parse_error( "port '" + c.pin + "' connected twice", c.pos.line, c.pos.col );
        }
        elaborate( *sub->second, path + "." + inst.name, qualify( inst.name ), binding );
        continue;
      }

      if ( !lib_.contains( inst.type ) )
        throw parse_error( "unknown library cell or module '" + inst.type + "'", inst.pos.line, inst.pos.col );
      auto const& lc = lib_.cell( inst.type );
      Cell cell;
      cell.id = static_cast<CellId>( nl_.cells.size() );
      cell.instance_path = path + "." + inst.name;
      cell.lib_cell = lc.name;
      std::vector<std::optional<NetId>> ins( lc.inputs.size() );
      std::optional<NetId> out, clk;
      for ( auto const& c : inst.conns )
      {
        if ( !c.net )
          throw parse_error( "pin '" + c.pin + "' of '" + inst.name + "' left unconnected", c.pos.line, c.pos.col );
        auto const n = resolve( c );
        bool matched = false;
        for ( std::size_t k = 0; k < lc.inputs.size(); ++k )
          if ( lc.inputs[k] == c.pin )
          {
            if ( ins[k] )
              throw parse_error( "pin '" + c.pin + "' connected twice", c.pos.line, c.pos.col );
            ins[k] = n;
            matched = true;
          }
        if ( c.pin == lc.output )
        {
          if ( out )
            throw parse_error( "pin '" + c.pin + "' connected twice", c.pos.line, c.pos.col );
          out = n;
          matched = true;
        }
        if ( lc.clock_pin && c.pin == *lc.clock_pin )
        {
          if ( clk )
            throw parse_error( "pin '" + c.pin + "' connected twice", c.pos.line, c.pos.col );
          clk = n;
          matched = true;
        }
        if ( !matched )
          throw parse_error( "cell '" + lc.name + "' has no pin '" + c.pin + "'", c.pos.line, c.pos.col );
      }
      for ( std::size_t k = 0; k < ins.size(); ++k )
      {
        if ( !ins[k] )
          throw parse_error( "input pin '" + lc.inputs[k] + "' of '" + inst.name + "' is unconnected", inst.pos.line,
                             inst.pos.col );
        cell.input_nets.push_back( *ins[k] );
      }
      if ( !out )
        throw parse_error( "output pin of '" + inst.name + "' is unconnected", inst.pos.line, inst.pos.col );
      if ( lc.clock_pin && !clk )
        throw parse_error( "clock pin of '" + inst.name + "' is unconnected", inst.pos.line, inst.pos.col );
      cell.output_net = *out;
      cell.clock_net = clk;
      cell_pos_.push_back( inst.pos );
      nl_.cells.push_back( std::move( cell ) );
    }
    depth_guard_.erase( m.name );
  }

  Library const& lib_;
  std::map<std::string, vmodule const*> defs_;
  std::set<std::string> depth_guard_;
  std::vector<net_info> nets_;
  std::vector<vpos> cell_pos_;
  Netlist nl_;
};

} // namespace detail

/*! \brief Parse and flatten a structural netlist against a cell library. */
inline Netlist parse_netlist( std::string_view source, Library const& lib )
{
  detail::verilog_reader reader( source );
  auto const mods = reader.modules();
  if ( mods.empty() )
    throw parse_error( "no modules in source", 1, 1 );
  return detail::elaborator( mods, lib ).run();
}

/*! \brief Emit a netlist as hierarchical structural text that parses back to an equal Netlist.
 *
 * Every module instance becomes its own module definition; nets cross
 * hierarchy boundaries through ports named after the net ("p_u0__n3").
 */
inline std::string write_netlist( Netlist const& nl, Library const& lib )
{
  auto const& hier = nl.hierarchy;
  std::unordered_map<std::string, std::size_t> hidx;
  for ( std::size_t i = 0; i < hier.size(); ++i )
    hidx.emplace( hier[i], i );
  if ( !hidx.count( nl.top ) )
    throw invariant_error( "hierarchy does not contain the top module" );
  auto index_of = [&]( std::string_view path ) -> std::size_t {
    auto const it = hidx.find( std::string( path ) );
    if ( it == hidx.end() )
      throw invariant_error( "module instance '" + std::string( path ) + "' is missing from the hierarchy" );
    return it->second;
  };
  std::vector<std::size_t> parent( hier.size(), SIZE_MAX );
  std::vector<std::vector<std::size_t>> children( hier.size() );
  for ( std::size_t i = 0; i < hier.size(); ++i )
    if ( hier[i] != nl.top )
    {
      parent[i] = index_of( module_of( hier[i] ) );
      children[parent[i]].push_back( i );
    }

  std::vector<std::size_t> owner( nl.nets.size() );
  for ( auto const& n : nl.nets )
    owner[n.id] = index_of( nl.net_owner( n.id ) );

  // nets used anywhere in the subtree of each instance
  std::vector<std::set<NetId>> uses( hier.size() );
  std::vector<std::vector<CellId>> local_cells( hier.size() );
  for ( auto const& c : nl.cells )
  {
    auto const m = index_of( module_of( c.instance_path ) );
    local_cells[m].push_back( c.id );
    std::vector<NetId> pins( c.input_nets );
    pins.push_back( c.output_net );
    if ( c.clock_net )
      pins.push_back( *c.clock_net );
    for ( auto n : pins )
    {
      for ( auto h = m; h != SIZE_MAX; h = parent[h] )
      {
        uses[h].insert( n );
        if ( h == owner[n] )
          break;
        if ( parent[h] == SIZE_MAX )
          throw invariant_error( "net '" + nl.nets[n].name + "' is used by '" + c.instance_path +
                                 "' outside the module that declares it" );
      }
    }
  }

  auto is_ancestor = [&]( std::size_t a, std::size_t h ) {
    for ( ; h != SIZE_MAX; h = parent[h] )
      if ( h == a )
        return true;
    return false;
  };
  auto mangle = []( std::string s ) {
    std::string out;
    for ( char c : s )
      out += c == '.' ? std::string( "__" ) : std::string( 1, c );
    return out;
  };
  auto module_name = [&]( std::size_t h ) {
    return hier[h] == nl.top ? nl.top : nl.top + "__" + mangle( hier[h].substr( nl.top.size() + 1 ) );
  };
  auto local_name = [&]( std::size_t h, NetId n ) {
    if ( owner[n] == h )
    {
      auto const& name = nl.nets[n].name;
      auto const pos = name.rfind( '.' );
      return pos == std::string::npos ? name : name.substr( pos + 1 );
    }
    return "p_" + mangle( nl.nets[n].name );
  };
  auto ports_of = [&]( std::size_t h ) {
    std::vector<NetId> ports;
    for ( auto n : uses[h] )
      if ( owner[n] != h && is_ancestor( owner[n], h ) )
        ports.push_back( n );
    return ports;
  };
  auto cap_attr = [&]( NetId n ) {
    return nl.nets[n].wire_cap != 0.0 ? "(* wire_cap = \"" + format_double( nl.nets[n].wire_cap ) + "\" *) "
                                      : std::string{};
  };

  std::vector<std::vector<NetId>> owned( hier.size() );
  for ( auto const& n : nl.nets )
    owned[owner[n.id]].push_back( n.id );

  std::ostringstream os;
  std::vector<std::size_t> order{ index_of( nl.top ) };
  for ( std::size_t i = 0; i < hier.size(); ++i )
    if ( hier[i] != nl.top )
      order.push_back( i );

  std::set<NetId> const pi( nl.primary_inputs.begin(), nl.primary_inputs.end() );
  std::set<NetId> const po( nl.primary_outputs.begin(), nl.primary_outputs.end() );
  for ( auto h : order )
  {
    bool const is_top = hier[h] == nl.top;
    std::vector<std::string> port_names;
    std::vector<NetId> ports;
    if ( is_top )
    {
      for ( auto n : nl.primary_inputs )
        port_names.push_back( local_name( h, n ) );
      for ( auto n : nl.primary_outputs )
        if ( !pi.count( n ) )
          port_names.push_back( local_name( h, n ) );
      os << "(* stage = \"" << to_string( nl.stage ) << "\" *)\n";
    }
    else
    {
      ports = ports_of( h );
      for ( auto n : ports )
        port_names.push_back( local_name( h, n ) );
    }
    os << "module " << module_name( h ) << " (";
    for ( std::size_t i = 0; i < port_names.size(); ++i )
      os << ( i ? ", " : "" ) << port_names[i];
    os << ");\n";

    if ( is_top )
    {
      for ( auto n : nl.primary_inputs )
        os << "  " << ( nl.clock_root == n ? "(* clock_root *) " : "" ) << cap_attr( n ) << "input "
           << local_name( h, n ) << ";\n";
      for ( auto n : nl.primary_outputs )
        if ( !pi.count( n ) )
          os << "  " << cap_attr( n ) << "output " << local_name( h, n ) << ";\n";
    }
    else
      for ( auto n : ports )
        os << "  input " << local_name( h, n ) << ";\n";
    for ( auto n : owned[h] )
      if ( !( is_top && ( pi.count( n ) || po.count( n ) ) ) )
        os << "  " << cap_attr( n ) << "wire " << local_name( h, n ) << ";\n";

    for ( auto ch : children[h] )
    {
      auto const inst = hier[ch].substr( hier[h].size() + 1 );
      os << "  " << module_name( ch ) << ' ' << inst << " (";
      bool first = true;
      for ( auto n : ports_of( ch ) )
      {
        os << ( first ? "" : ", " ) << '.' << local_name( ch, n ) << '(' << local_name( h, n ) << ')';
        first = false;
      }
      os << ");\n";
    }
    for ( auto cid : local_cells[h] )
    {
      auto const& c = nl.cells[cid];
      auto const& lc = lib.cell( c.lib_cell );
      os << "  " << lc.name << ' ' << c.instance_path.substr( hier[h].size() + 1 ) << " (";
      for ( std::size_t k = 0; k < lc.inputs.size(); ++k )
        os << '.' << lc.inputs[k] << '(' << local_name( h, c.input_nets[k] ) << "), ";
      if ( c.clock_net )
        os << '.' << *lc.clock_pin << '(' << local_name( h, *c.clock_net ) << "), ";
      os << '.' << lc.output << '(' << local_name( h, c.output_net ) << "));\n";
    }
    os << "endmodule\n\n";
  }
  return os.str();
}

} // namespace pwrgraph
