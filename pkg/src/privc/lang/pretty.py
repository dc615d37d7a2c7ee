"""Pretty-printer for both dialects; parse(pretty(parse(s))) is a fixed point."""

from __future__ import annotations

from . import ast as A

_PREC = {"==": 1, "!=": 1, "<": 2, "+": 3, "-": 3, "*": 4, "/": 4}


def type_str(ty) -> str:
    if isinstance(ty, A.Base):
        return f"{ty.label} {ty.bty}" if ty.label else ty.bty
    if isinstance(ty, A.Ptr):
        head = f"{ty.label} {ty.bty}" if ty.label else ty.bty
        return head + "*" * ty.indirection
    if isinstance(ty, A.ArrPtr):
        head = f"{ty.label} {ty.bty}" if ty.label else ty.bty
        return head + "[]"
    raise TypeError(f"unprintable type {ty!r}")


def expr_str(e, parent_prec=0) -> str:
    if isinstance(e, A.Num):
        if isinstance(e.value, float):
            return repr(e.value)
        return str(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.NullLit):
        return "NULL"
    if isinstance(e, A.ArrRead):
        return f"{e.name}[{expr_str(e.index)}]"
    if isinstance(e, A.AddrOf):
        return f"&{e.name}"
    if isinstance(e, A.Deref):
        return f"*{e.name}"
    if isinstance(e, A.PreInc):
        return f"++{e.name}"
    if isinstance(e, A.Call):
        return f"{e.name}({', '.join(expr_str(a) for a in e.args)})"
    if isinstance(e, A.Cast):
        return f"({type_str(e.ty)}) {expr_str(e.expr, 5)}"
    if isinstance(e, A.SizeOf):
        return f"sizeof({type_str(e.ty)})"
    if isinstance(e, A.Malloc):
        return f"malloc({expr_str(e.size)})"
    if isinstance(e, A.PMalloc):
        return f"pmalloc({expr_str(e.count)}, {type_str(e.ty)})"
    if isinstance(e, A.Declassify):
        return f"declassify({expr_str(e.expr)})"
    if isinstance(e, A.BinOp):
        prec = _PREC[e.op]
        # left-associative: right child needs parens at equal precedence
        s = f"{expr_str(e.left, prec)} {e.op} {expr_str(e.right, prec + 1)}"
        if prec < parent_prec:
            return f"({s})"
        return s
    raise TypeError(f"unprintable expression {e!r}")


def _stmt_lines(s, indent):
    pad = "    " * indent
    if isinstance(s, A.Skip):
        return [pad + ";"]
    if isinstance(s, A.Seq):
        return _stmt_lines(s.first, indent) + _stmt_lines(s.second, indent)
    if isinstance(s, A.Decl):
        return [pad + f"{type_str(s.ty)} {s.name};"]
    if isinstance(s, A.ArrDecl):
        base = f"{s.ty.label} {s.ty.bty}" if s.ty.label else s.ty.bty
        return [pad + f"{base} {s.name}[{expr_str(s.size)}];"]
    if isinstance(s, A.Assign):
        return [pad + f"{s.name} = {expr_str(s.expr)};"]
    if isinstance(s, A.ArrWrite):
        return [pad + f"{s.name}[{expr_str(s.index)}] = {expr_str(s.expr)};"]
    if isinstance(s, A.DerefWrite):
        return [pad + f"*{s.name} = {expr_str(s.expr)};"]
    if isinstance(s, A.Block):
        return [pad + "{"] + _stmt_lines(s.body, indent + 1) + [pad + "}"]
    if isinstance(s, A.If):
        lines = [pad + f"if ({expr_str(s.cond)})"]
        lines += _block_lines(s.then, indent)
        if not isinstance(s.els, A.Skip):
            lines.append(pad + "else")
            lines += _block_lines(s.els, indent)
        return lines
    if isinstance(s, A.While):
        return [pad + f"while ({expr_str(s.cond)})"] + _block_lines(s.body, indent)
    if isinstance(s, A.FunDef):
        params = ", ".join(f"{type_str(p.ty)} {p.name}" for p in s.params) or "void"
        return ([pad + f"{type_str(s.ret)} {s.name}({params})"]
                + _block_lines(s.body, indent))
    if isinstance(s, A.FunProto):
        params = ", ".join(f"{type_str(p.ty)} {p.name}" for p in s.params) or "void"
        return [pad + f"{type_str(s.ret)} {s.name}({params});"]
    if isinstance(s, A.Free):
        return [pad + f"free({s.name});"]
    if isinstance(s, A.PFree):
        return [pad + f"pfree({s.name});"]
    if isinstance(s, (A.SmcInput, A.SmcOutput)):
        head = ("mc" if s.erased else "smc") + ("input" if isinstance(s, A.SmcInput) else "output")
        target = s.name if s.elem is None else f"{s.name}[{expr_str(s.elem)}]"
        args = [target, expr_str(s.party)] + ([expr_str(s.length)] if s.length is not None else [])
        return [pad + f"{head}({', '.join(args)});"]
    if isinstance(s, A.ExprStmt):
        return [pad + f"{expr_str(s.expr)};"]
    raise TypeError(f"unprintable statement {s!r}")


def _block_lines(s, indent):
    if isinstance(s, A.Block):
        return _stmt_lines(s, indent)
    pad = "    " * indent
    return [pad + "{"] + _stmt_lines(s, indent + 1) + [pad + "}"]


def pretty(program: A.Program) -> str:
    if isinstance(program.body, A.Skip):
        return ""
    return "\n".join(_stmt_lines(program.body, 0)) + "\n"
