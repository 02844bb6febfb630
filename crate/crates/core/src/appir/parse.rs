//! Line-oriented parser for the `.mapp` app format.
//!
//! Parsing is total: any input yields either an `App` that satisfies every
//! type invariant or a diagnostic with line/column position.

use std::collections::BTreeMap;

use super::*;

/// Parse failure with source position. Column is 1-based and points at the
/// offending token where that is known, otherwise at the start of the line.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError { line, col, msg: msg.into() }
    }
}

struct Tok<'a> {
    text: &'a str,
    col: usize,
}

/// Splits a line into whitespace-separated tokens, honoring double-quoted
/// string literals and stripping `#` comments. Works on char boundaries
/// so multibyte input cannot produce mid-codepoint slices.
fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok<'_>>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let n = chars.len();
    let byte_at = |k: usize| if k < n { chars[k].0 } else { line.len() };
    let mut k = 0;
    while k < n {
        let (start, c) = chars[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c == '"' {
            k += 1;
            let mut closed = false;
            while k < n {
                match chars[k].1 {
                    '\\' => k += 2,
                    '"' => {
                        k += 1;
                        closed = true;
                        break;
                    }
                    _ => k += 1,
                }
            }
            if !closed {
                return Err(ParseError::new(lineno, start + 1, "unterminated string literal"));
            }
            toks.push(Tok { text: &line[start..byte_at(k)], col: start + 1 });
        } else {
            let mut end = k;
            while end < n && !chars[end].1.is_whitespace() && chars[end].1 != '#' {
                end += 1;
            }
            toks.push(Tok { text: &line[start..byte_at(end)], col: start + 1 });
            k = end;
        }
    }
    Ok(toks)
}

fn unquote(tok: &Tok<'_>, lineno: usize) -> Result<String, ParseError> {
    let t = tok.text;
    debug_assert!(t.starts_with('"'));
    let inner = &t[1..t.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                other => {
                    return Err(ParseError::new(
                        lineno,
                        tok.col,
                        format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default()),
                    ))
                }
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

fn parse_literal(tok: &Tok<'_>, lineno: usize) -> Result<Literal, ParseError> {
    let t = tok.text;
    if t.starts_with('"') {
        return Ok(Literal::Str(unquote(tok, lineno)?));
    }
    match t {
        "true" => return Ok(Literal::Bool(true)),
        "false" => return Ok(Literal::Bool(false)),
        _ => {}
    }
    t.parse::<i64>()
        .map(Literal::Int)
        .map_err(|_| ParseError::new(lineno, tok.col, format!("expected literal, got `{t}`")))
}

fn parse_reg(tok: &Tok<'_>, lineno: usize) -> Result<u16, ParseError> {
    tok.text
        .strip_prefix('v')
        .and_then(|n| n.parse::<u16>().ok())
        .ok_or_else(|| {
            ParseError::new(lineno, tok.col, format!("expected register, got `{}`", tok.text))
        })
}

fn parse_index(tok: &Tok<'_>, lineno: usize) -> Result<usize, ParseError> {
    tok.text.parse::<usize>().map_err(|_| {
        ParseError::new(lineno, tok.col, format!("expected instruction index, got `{}`", tok.text))
    })
}

fn parse_method_sig(tok: &Tok<'_>, lineno: usize) -> Result<MethodSig, ParseError> {
    let t = tok.text;
    if t.split('.').count() == 2 && !t.starts_with('.') && !t.ends_with('.') {
        Ok(MethodSig(t.to_string()))
    } else {
        Err(ParseError::new(
            lineno,
            tok.col,
            format!("expected method signature `Class.method`, got `{t}`"),
        ))
    }
}

fn parse_field_sig(tok: &Tok<'_>, lineno: usize) -> Result<FieldSig, ParseError> {
    let t = tok.text;
    if t.split('.').count() == 2 && !t.starts_with('.') && !t.ends_with('.') {
        Ok(FieldSig(t.to_string()))
    } else {
        Err(ParseError::new(
            lineno,
            tok.col,
            format!("expected field signature `Class.field`, got `{t}`"),
        ))
    }
}

fn parse_instr(toks: &[Tok<'_>], lineno: usize) -> Result<Instr, ParseError> {
    let op = &toks[0];
    let args = &toks[1..];
    let want = |n: usize| -> Result<(), ParseError> {
        if args.len() != n {
            Err(ParseError::new(
                lineno,
                op.col,
                format!("`{}` expects {n} operand(s), got {}", op.text, args.len()),
            ))
        } else {
            Ok(())
        }
    };
    match op.text {
        "const" => {
            want(2)?;
            Ok(Instr::Const {
                dst: parse_reg(&args[0], lineno)?,
                value: parse_literal(&args[1], lineno)?,
            })
        }
        "move" => {
            want(2)?;
            Ok(Instr::Move {
                dst: parse_reg(&args[0], lineno)?,
                src: parse_reg(&args[1], lineno)?,
            })
        }
        "binop" => {
            want(4)?;
            let arith = match args[0].text {
                "+" => ArithOp::Add,
                "-" => ArithOp::Sub,
                "*" => ArithOp::Mul,
                "/" => ArithOp::Div,
                other => {
                    return Err(ParseError::new(
                        lineno,
                        args[0].col,
                        format!("unknown arithmetic operator `{other}`"),
                    ))
                }
            };
            Ok(Instr::BinOp {
                op: arith,
                dst: parse_reg(&args[1], lineno)?,
                lhs: parse_reg(&args[2], lineno)?,
                rhs: parse_reg(&args[3], lineno)?,
            })
        }
        "if" => {
            want(4)?;
            let cmp = match args[0].text {
                "==" => CmpOp::Eq,
                "!=" => CmpOp::Ne,
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                ">" => CmpOp::Gt,
                ">=" => CmpOp::Ge,
                other => {
                    return Err(ParseError::new(
                        lineno,
                        args[0].col,
                        format!("unknown comparison `{other}`"),
                    ))
                }
            };
            Ok(Instr::If {
                cmp,
                lhs: parse_reg(&args[1], lineno)?,
                rhs: parse_reg(&args[2], lineno)?,
                target: parse_index(&args[3], lineno)?,
            })
        }
        "goto" => {
            want(1)?;
            Ok(Instr::Goto { target: parse_index(&args[0], lineno)? })
        }
        "sget" => {
            want(2)?;
            Ok(Instr::SGet {
                dst: parse_reg(&args[0], lineno)?,
                field: parse_field_sig(&args[1], lineno)?,
            })
        }
        "sput" => {
            want(2)?;
            Ok(Instr::SPut {
                src: parse_reg(&args[0], lineno)?,
                field: parse_field_sig(&args[1], lineno)?,
            })
        }
        "iget" => {
            want(3)?;
            Ok(Instr::IGet {
                dst: parse_reg(&args[0], lineno)?,
                obj: parse_reg(&args[1], lineno)?,
                field: args[2].text.to_string(),
            })
        }
        "iput" => {
            want(3)?;
            Ok(Instr::IPut {
                src: parse_reg(&args[0], lineno)?,
                obj: parse_reg(&args[1], lineno)?,
                field: args[2].text.to_string(),
            })
        }
        "new" => {
            want(2)?;
            Ok(Instr::New {
                dst: parse_reg(&args[0], lineno)?,
                class: args[1].text.to_string(),
            })
        }
        "aget" => {
            want(3)?;
            Ok(Instr::AGet {
                dst: parse_reg(&args[0], lineno)?,
                arr: parse_reg(&args[1], lineno)?,
                idx: parse_reg(&args[2], lineno)?,
            })
        }
        "aput" => {
            want(3)?;
            Ok(Instr::APut {
                src: parse_reg(&args[0], lineno)?,
                arr: parse_reg(&args[1], lineno)?,
                idx: parse_reg(&args[2], lineno)?,
            })
        }
        "invoke" => {
            if args.is_empty() {
                return Err(ParseError::new(lineno, op.col, "`invoke` needs a method"));
            }
            let method = parse_method_sig(&args[0], lineno)?;
            let mut regs = Vec::new();
            for a in &args[1..] {
                regs.push(parse_reg(a, lineno)?);
            }
            Ok(Instr::Invoke { method, args: regs })
        }
        "move-result" => {
            want(1)?;
            Ok(Instr::MoveResult { dst: parse_reg(&args[0], lineno)? })
        }
        "api" => {
            if args.is_empty() {
                return Err(ParseError::new(lineno, op.col, "`api` needs an API name"));
            }
            let api = Api::from_name(args[0].text).ok_or_else(|| {
                ParseError::new(
                    lineno,
                    args[0].col,
                    format!("unknown API `{}` (not in catalog)", args[0].text),
                )
            })?;
            let mut regs = Vec::new();
            for a in &args[1..] {
                regs.push(parse_reg(a, lineno)?);
            }
            if regs.len() != api.arity() {
                return Err(ParseError::new(
                    lineno,
                    args[0].col,
                    format!("`{}` expects {} argument(s), got {}", api, api.arity(), regs.len()),
                ));
            }
            Ok(Instr::Api { api, args: regs })
        }
        "return" => match args.len() {
            0 => Ok(Instr::Return { src: None }),
            1 => Ok(Instr::Return { src: Some(parse_reg(&args[0], lineno)?) }),
            _ => Err(ParseError::new(lineno, op.col, "`return` takes at most one register")),
        },
        other => Err(ParseError::new(lineno, op.col, format!("unknown instruction `{other}`"))),
    }
}

enum Section {
    Top,
    Manifest,
    Activity(Activity),
    Method(Method),
}

/// Parses `.mapp` source text into a validated [`App`].
pub fn parse_app(text: &str) -> Result<App, ParseError> {
    let mut manifest: Option<Manifest> = None;
    let mut activities: Vec<Activity> = Vec::new();
    let mut methods: BTreeMap<MethodSig, Method> = BTreeMap::new();
    let mut section = Section::Top;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks = tokenize(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let head = &toks[0];
        match &mut section {
            Section::Top => match head.text {
                "MANIFEST" => {
                    if manifest.is_some() {
                        return Err(ParseError::new(lineno, head.col, "duplicate MANIFEST section"));
                    }
                    manifest = Some(Manifest {
                        main_activity: ActivityId(String::new()),
                        intent_filters: Vec::new(),
                    });
                    section = Section::Manifest;
                }
                "ACTIVITY" => {
                    if toks.len() != 2 {
                        return Err(ParseError::new(lineno, head.col, "ACTIVITY expects a name"));
                    }
                    section = Section::Activity(Activity {
                        id: ActivityId(toks[1].text.to_string()),
                        layout: LayoutDecl::default(),
                        lifecycle: Lifecycle::default(),
                    });
                }
                "METHOD" => {
                    if toks.len() != 4 {
                        return Err(ParseError::new(
                            lineno,
                            head.col,
                            "METHOD expects `METHOD Class.name regs=N params=K`",
                        ));
                    }
                    let sig = parse_method_sig(&toks[1], lineno)?;
                    let regs = toks[2]
                        .text
                        .strip_prefix("regs=")
                        .and_then(|n| n.parse::<u16>().ok())
                        .ok_or_else(|| ParseError::new(lineno, toks[2].col, "expected regs=N"))?;
                    let params = toks[3]
                        .text
                        .strip_prefix("params=")
                        .and_then(|n| n.parse::<u16>().ok())
                        .ok_or_else(|| ParseError::new(lineno, toks[3].col, "expected params=K"))?;
                    if methods.contains_key(&sig) {
                        return Err(ParseError::new(
                            lineno,
                            toks[1].col,
                            format!("duplicate method `{sig}`"),
                        ));
                    }
                    section = Section::Method(Method {
                        sig,
                        reg_count: regs,
                        param_count: params,
                        body: Vec::new(),
                        blocks: Vec::new(),
                    });
                }
                other => {
                    return Err(ParseError::new(
                        lineno,
                        head.col,
                        format!("expected MANIFEST, ACTIVITY or METHOD, got `{other}`"),
                    ))
                }
            },
            Section::Manifest => match head.text {
                "END" => section = Section::Top,
                "main" => {
                    if toks.len() != 2 {
                        return Err(ParseError::new(lineno, head.col, "main expects an activity"));
                    }
                    manifest.as_mut().unwrap().main_activity = ActivityId(toks[1].text.to_string());
                }
                "filter" => {
                    if toks.len() != 3 {
                        return Err(ParseError::new(
                            lineno,
                            head.col,
                            "filter expects `filter Activity action`",
                        ));
                    }
                    manifest
                        .as_mut()
                        .unwrap()
                        .intent_filters
                        .push((ActivityId(toks[1].text.to_string()), toks[2].text.to_string()));
                }
                other => {
                    return Err(ParseError::new(
                        lineno,
                        head.col,
                        format!("unknown manifest entry `{other}`"),
                    ))
                }
            },
            Section::Activity(act) => match head.text {
                "END" => {
                    let Section::Activity(done) =
                        std::mem::replace(&mut section, Section::Top)
                    else {
                        unreachable!()
                    };
                    activities.push(done);
                }
                "oncreate" | "onpause" | "onstop" => {
                    if toks.len() != 2 {
                        return Err(ParseError::new(lineno, head.col, "expected a method"));
                    }
                    let sig = parse_method_sig(&toks[1], lineno)?;
                    let slot = match head.text {
                        "oncreate" => &mut act.lifecycle.on_create,
                        "onpause" => &mut act.lifecycle.on_pause,
                        _ => &mut act.lifecycle.on_stop,
                    };
                    if slot.is_some() {
                        return Err(ParseError::new(
                            lineno,
                            head.col,
                            format!("duplicate `{}` declaration", head.text),
                        ));
                    }
                    *slot = Some(sig);
                }
                "widget" => {
                    if toks.len() != 3 {
                        return Err(ParseError::new(
                            lineno,
                            head.col,
                            "widget expects `widget id kind`",
                        ));
                    }
                    let kind = WidgetKind::from_name(toks[2].text).ok_or_else(|| {
                        ParseError::new(
                            lineno,
                            toks[2].col,
                            format!("unknown widget kind `{}`", toks[2].text),
                        )
                    })?;
                    act.layout.widgets.push(Widget {
                        id: WidgetId(toks[1].text.to_string()),
                        kind,
                        bindings: BTreeMap::new(),
                    });
                }
                "bind" => {
                    if toks.len() != 4 {
                        return Err(ParseError::new(
                            lineno,
                            head.col,
                            "bind expects `bind widget event-kind method`",
                        ));
                    }
                    let wid = WidgetId(toks[1].text.to_string());
                    let kind = BindKind::from_name(toks[2].text).ok_or_else(|| {
                        ParseError::new(
                            lineno,
                            toks[2].col,
                            format!("unknown event kind `{}`", toks[2].text),
                        )
                    })?;
                    let handler = parse_method_sig(&toks[3], lineno)?;
                    let widget = act
                        .layout
                        .widgets
                        .iter_mut()
                        .find(|w| w.id == wid)
                        .ok_or_else(|| {
                            ParseError::new(
                                lineno,
                                toks[1].col,
                                format!("bind references undeclared widget `{wid}`"),
                            )
                        })?;
                    if widget.bindings.insert(kind, handler).is_some() {
                        return Err(ParseError::new(
                            lineno,
                            toks[2].col,
                            format!("duplicate binding for ({wid}, {})", kind.name()),
                        ));
                    }
                }
                other => {
                    return Err(ParseError::new(
                        lineno,
                        head.col,
                        format!("unknown activity entry `{other}`"),
                    ))
                }
            },
            Section::Method(m) => match head.text {
                "END" => {
                    let Section::Method(done) = std::mem::replace(&mut section, Section::Top)
                    else {
                        unreachable!()
                    };
                    methods.insert(done.sig.clone(), done);
                }
                _ => m.body.push(parse_instr(&toks, lineno)?),
            },
        }
    }

    match section {
        Section::Top => {}
        _ => {
            let lineno = text.lines().count();
            return Err(ParseError::new(lineno, 1, "unterminated section (missing END)"));
        }
    }

    let manifest =
        manifest.ok_or_else(|| ParseError::new(1, 1, "missing MANIFEST section"))?;
    let app = App { manifest, activities, methods };
    validate(app).map_err(|e| {
        // Validation failures have no single source line; report at 0:0 so
        // callers can still distinguish them from token-level errors.
        ParseError::new(0, 0, e.to_string())
    })
}
