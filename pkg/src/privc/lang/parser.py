"""Recursive-descent parser for the labeled dialect and its erased (vanilla) twin.

Parsing follows standard C precedence and associativity. Declarations with
initializers and comma-separated declarator lists are desugared into plain
declarations followed by assignments, so every surviving node is one grammar
production. Unlabeled int/float declarations default to private in the labeled
dialect; the vanilla dialect has no labels at all.
"""

from __future__ import annotations

from ..errors import ParseError, UnsupportedConstruct
from . import ast as A
from .lexer import Token, tokenize

_TYPE_STARTERS = {"private", "public", "int", "float", "void"}


class _Parser:
    def __init__(self, tokens, vanilla: bool):
        self.toks = tokens
        self.i = 0
        self.vanilla = vanilla

    # -- token helpers

    def peek(self, k=0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, kind, k=0) -> bool:
        return self.peek(k).kind == kind

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or t.kind!r}", t.line, t.col)
        return self.next()

    def fail(self, msg):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # -- entry

    def parse_program(self) -> A.Program:
        stmts = []
        while not self.at("eof"):
            stmts.append(self.statement())
        return A.Program(A.seq(stmts))

    # -- statements

    def statement(self):
        t = self.peek()
        if t.kind in ("struct",):
            raise UnsupportedConstruct(f"{t.line}:{t.col}: '{t.text}' is outside the supported C subset")
        if t.kind in ("for", "return"):
            raise UnsupportedConstruct(
                f"{t.line}:{t.col}: '{t.text}' is not in the grammar (rewrite with while / expression statements)")
        if t.kind == ";":
            self.next()
            return A.Skip(pos=(t.line, t.col))
        if t.kind == "{":
            return self.block()
        if t.kind == "if":
            return self.if_stmt()
        if t.kind == "while":
            return self.while_stmt()
        if t.kind in ("free", "pfree"):
            return self.free_stmt()
        if t.kind in ("smcinput", "smcoutput", "mcinput", "mcoutput"):
            return self.io_stmt()
        if t.kind in _TYPE_STARTERS:
            return self.declaration()
        return self.assign_or_expr_stmt()

    def block(self):
        t = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.at("eof"):
                self.fail("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return A.Block(A.seq(stmts), pos=(t.line, t.col))

    def if_stmt(self):
        t = self.expect("if")
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        then = self._as_block(self.statement())
        els = A.Skip(pos=(t.line, t.col))
        if self.at("else"):
            self.next()
            els = self._as_block(self.statement())
        return A.If(cond, then, els, pos=(t.line, t.col))

    @staticmethod
    def _as_block(s):
        # normalize branch/loop bodies so pretty -> parse is a fixed point
        if isinstance(s, A.Block):
            return s
        return A.Block(s, pos=getattr(s, "pos", (0, 0)))

    def while_stmt(self):
        t = self.expect("while")
        self.expect("(")
        cond = self.expression()
        self.expect(")")
        body = self._as_block(self.statement())
        return A.While(cond, body, pos=(t.line, t.col))

    def free_stmt(self):
        t = self.next()
        self.expect("(")
        name = self.expect("id")
        self.expect(")")
        self.expect(";")
        if t.kind == "pfree":
            if self.vanilla:
                raise ParseError("pfree is not in the erased dialect", t.line, t.col)
            return A.PFree(name.text, pos=(t.line, t.col))
        return A.Free(name.text, pos=(t.line, t.col))

    def io_stmt(self):
        t = self.next()
        erased = t.kind in ("mcinput", "mcoutput")
        if erased and not self.vanilla:
            raise ParseError(f"{t.kind} belongs to the erased dialect", t.line, t.col)
        if not erased and self.vanilla:
            raise ParseError(f"{t.kind} is not in the erased dialect", t.line, t.col)
        self.expect("(")
        name = self.expect("id")
        elem = None
        if self.at("["):
            self.next()
            elem = self.expression()
            self.expect("]")
        self.expect(",")
        party = self.expression()
        length = None
        if self.at(","):
            self.next()
            length = self.expression()
        self.expect(")")
        self.expect(";")
        if elem is not None and length is not None:
            raise ParseError("indexed I/O targets take no length", t.line, t.col)
        cls = A.SmcInput if t.kind in ("smcinput", "mcinput") else A.SmcOutput
        return cls(name.text, party, length, erased=erased, elem=elem,
                   pos=(t.line, t.col))

    # -- declarations

    def base_type(self):
        t = self.peek()
        label = None
        if t.kind in ("private", "public"):
            if self.vanilla:
                raise ParseError("privacy labels are not in the erased dialect", t.line, t.col)
            label = self.next().kind
        bt = self.peek()
        if bt.kind not in ("int", "float", "void"):
            self.fail("expected a base type (int, float, void)")
        self.next()
        if bt.kind == "void" and label is not None:
            raise ParseError("void never carries a privacy label", bt.line, bt.col)
        return label, bt.kind

    def full_type(self, label, bty):
        """Consume any '*'s following the base type; apply the private default."""
        stars = 0
        while self.at("*"):
            self.next()
            stars += 1
        if label is None and not self.vanilla and bty in ("int", "float"):
            label = A.PRIVATE
        if stars:
            return A.Ptr(label, bty, stars)
        return A.Base(label, bty)

    def declaration(self):
        t = self.peek()
        label, bty = self.base_type()
        # function definition / prototype: type (and '*'s) followed by name '('
        k = 0
        while self.at("*", k):
            k += 1
        if self.at("id", k) and self.at("(", k + 1):
            return self.fun_decl(label, bty, t)
        if bty == "void":
            self.fail("void is only valid as a function type")
        stmts = []
        while True:
            stars = 0
            while self.at("*"):
                self.next()
                stars += 1
            name = self.expect("id")
            eff_label = label
            if eff_label is None and not self.vanilla:
                eff_label = A.PRIVATE
            if self.at("["):
                if stars:
                    self.fail("pointer-to-array declarators are not supported")
                self.next()
                size = self.expression()
                self.expect("]")
                if self.at("["):
                    raise UnsupportedConstruct(
                        f"{name.line}:{name.col}: multi-dimensional arrays are outside the grammar")
                stmts.append(A.ArrDecl(A.Base(eff_label, bty), name.text, size, pos=(name.line, name.col)))
                if self.at("="):
                    self.next()
                    self.expect("{")
                    idx = 0
                    while True:
                        e = self.expression()
                        stmts.append(A.ArrWrite(name.text, A.Num(idx), e, pos=(name.line, name.col)))
                        idx += 1
                        if not self.at(","):
                            break
                        self.next()
                    self.expect("}")
            else:
                ty = A.Ptr(eff_label, bty, stars) if stars else A.Base(eff_label, bty)
                stmts.append(A.Decl(ty, name.text, pos=(name.line, name.col)))
                if self.at("="):
                    self.next()
                    e = self.expression()
                    stmts.append(A.Assign(name.text, e, pos=(name.line, name.col)))
            if self.at(","):
                self.next()
                continue
            break
        self.expect(";")
        return A.seq(stmts)

    def fun_decl(self, label, bty, t):
        stars = 0
        while self.at("*"):
            self.next()
            stars += 1
        name = self.expect("id")
        self.expect("(")
        params = []
        if self.at("void") and self.at(")", 1):
            self.next()
        elif not self.at(")"):
            while True:
                plabel, pbty = self.base_type()
                pty = self.full_type(plabel, pbty)
                pname = self.expect("id")
                params.append(A.Param(pty, pname.text))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        if label is None and not self.vanilla and bty in ("int", "float"):
            label = A.PRIVATE
        ret = A.Ptr(label, bty, stars) if stars else A.Base(label, bty)
        if self.at("{"):
            body = self.block()
            return A.FunDef(ret, name.text, params, body, pos=(t.line, t.col))
        self.expect(";")
        return A.FunProto(ret, name.text, params, pos=(t.line, t.col))

    # -- assignments and expression statements

    def assign_or_expr_stmt(self):
        t = self.peek()
        e = self.expression()
        if self.at("="):
            self.next()
            rhs = self.expression()
            self.expect(";")
            if isinstance(e, A.Var):
                return A.Assign(e.name, rhs, pos=(t.line, t.col))
            if isinstance(e, A.ArrRead):
                return A.ArrWrite(e.name, e.index, rhs, pos=(t.line, t.col))
            if isinstance(e, A.Deref):
                return A.DerefWrite(e.name, rhs, pos=(t.line, t.col))
            raise ParseError("invalid assignment target", t.line, t.col)
        self.expect(";")
        return A.ExprStmt(e, pos=(t.line, t.col))

    # -- expressions (C precedence: == != < below + -, below * /)

    def expression(self):
        return self.equality()

    def equality(self):
        e = self.relational()
        while self.peek().kind in ("==", "!="):
            op = self.next()
            rhs = self.relational()
            e = A.BinOp(op.kind, e, rhs, pos=(op.line, op.col))
        return e

    def relational(self):
        e = self.additive()
        while self.at("<"):
            op = self.next()
            rhs = self.additive()
            e = A.BinOp("<", e, rhs, pos=(op.line, op.col))
        return e

    def additive(self):
        e = self.multiplicative()
        while self.peek().kind in ("+", "-"):
            op = self.next()
            rhs = self.multiplicative()
            e = A.BinOp(op.kind, e, rhs, pos=(op.line, op.col))
        return e

    def multiplicative(self):
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.next()
            rhs = self.unary()
            e = A.BinOp(op.kind, e, rhs, pos=(op.line, op.col))
        return e

    def unary(self):
        t = self.peek()
        if t.kind == "&":
            self.next()
            name = self.expect("id")
            return A.AddrOf(name.text, pos=(t.line, t.col))
        if t.kind == "*":
            self.next()
            name = self.expect("id")
            return A.Deref(name.text, pos=(t.line, t.col))
        if t.kind == "++":
            self.next()
            name = self.expect("id")
            return A.PreInc(name.text, pos=(t.line, t.col))
        if t.kind == "(" and self.peek(1).kind in _TYPE_STARTERS:
            self.next()
            label, bty = self.base_type()
            ty = self.full_type(label, bty)
            self.expect(")")
            e = self.unary()
            return A.Cast(ty, e, pos=(t.line, t.col))
        return self.primary()

    def primary(self):
        t = self.peek()
        if t.kind == "num":
            self.next()
            return A.Num(int(t.text), pos=(t.line, t.col))
        if t.kind == "fnum":
            self.next()
            return A.Num(float(t.text), pos=(t.line, t.col))
        if t.kind == "NULL":
            self.next()
            return A.NullLit(pos=(t.line, t.col))
        if t.kind == "(":
            self.next()
            e = self.expression()
            self.expect(")")
            return e
        if t.kind == "sizeof":
            self.next()
            self.expect("(")
            label, bty = self.base_type()
            ty = self.full_type(label, bty)
            self.expect(")")
            return A.SizeOf(ty, pos=(t.line, t.col))
        if t.kind == "malloc":
            self.next()
            self.expect("(")
            e = self.expression()
            self.expect(")")
            return A.Malloc(e, pos=(t.line, t.col))
        if t.kind == "pmalloc":
            if self.vanilla:
                raise ParseError("pmalloc is not in the erased dialect", t.line, t.col)
            self.next()
            self.expect("(")
            e = self.expression()
            self.expect(",")
            label, bty = self.base_type()
            ty = self.full_type(label, bty)
            self.expect(")")
            return A.PMalloc(e, ty, pos=(t.line, t.col))
        if t.kind == "declassify":
            self.next()
            self.expect("(")
            e = self.expression()
            self.expect(")")
            return A.Declassify(e, pos=(t.line, t.col))
        if t.kind == "id":
            self.next()
            if self.at("("):
                self.next()
                args = []
                if self.at("void") and self.at(")", 1):
                    self.next()
                elif not self.at(")"):
                    while True:
                        args.append(self.expression())
                        if self.at(","):
                            self.next()
                            continue
                        break
                self.expect(")")
                return A.Call(t.text, args, pos=(t.line, t.col))
            if self.at("["):
                self.next()
                idx = self.expression()
                self.expect("]")
                if self.at("["):
                    raise UnsupportedConstruct(
                        f"{t.line}:{t.col}: multi-dimensional arrays are outside the grammar")
                return A.ArrRead(t.text, idx, pos=(t.line, t.col))
            return A.Var(t.text, pos=(t.line, t.col))
        self.fail(f"unexpected token {t.text or t.kind!r}")


def parse(source: str, vanilla: bool = False) -> A.Program:
    """Parse .sc source into a Program; `vanilla` selects the erased dialect."""
    return _Parser(tokenize(source), vanilla).parse_program()
