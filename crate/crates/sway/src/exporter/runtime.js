// Animation runtime generated by sway. Weights are computed from the live
// document when the animation is created (or on every replay with
// `{ recompute: "replay" }`).

// <sway-program>
const PROGRAM = __SWAY_PROGRAM__;
// </sway-program>

export { PROGRAM as program };

const EASINGS = {
  "linear": (u) => u,
  "ease-in-quad": (u) => u * u,
  "ease-out-quad": (u) => u * (2 - u),
  "ease-in-out-cubic": (u) => (u < 0.5 ? 4 * u * u * u : 1 - Math.pow(-2 * u + 2, 3) / 2),
  "sine-in-out": (u) => -(Math.cos(Math.PI * u) - 1) / 2,
};

const TRANSFORM_PROPS = ["translateX", "translateY", "rotate", "scale"];
const NON_RENDERED = "defs,clipPath,mask,pattern,symbol,marker,linearGradient,radialGradient,filter";

const clamp01 = (v) => Math.min(1, Math.max(0, v));

function ease(name, u) {
  const f = EASINGS[name || "linear"] || EASINGS.linear;
  return clamp01(f(clamp01(u)));
}

function parseColor(text) {
  const hex = text.trim().replace(/^#/, "");
  if (hex.length === 3) return [...hex].map((c) => parseInt(c + c, 16));
  return [0, 2, 4].map((i) => parseInt(hex.slice(i, i + 2), 16));
}

function formatColor(rgb) {
  return "#" + rgb.map((c) => c.toString(16).padStart(2, "0")).join("");
}

function lerp(a, b, t) {
  if (typeof a === "number" && typeof b === "number") return a + (b - a) * t;
  if (typeof a === "string" && typeof b === "string") {
    const ca = parseColor(a);
    const cb = parseColor(b);
    return formatColor(ca.map((x, i) => Math.min(255, Math.max(0, Math.floor(x + (cb[i] - x) * t + 0.5)))));
  }
  return a;
}

export function interpolateTrack(track, u) {
  const keys = track.keyframes;
  if (keys.length === 0) return undefined;
  u = clamp01(u);
  let after = 0;
  while (after < keys.length && keys[after].offset <= u) after++;
  if (after === 0) return keys[0].value;
  const k0 = keys[after - 1];
  if (k0.offset === u || after === keys.length) return k0.value;
  const k1 = keys[after];
  const span = k1.offset - k0.offset;
  const local = span > 0 ? (u - k0.offset) / span : 1;
  return lerp(k0.value, k1.value, ease(k0.easing, local));
}

export function clipValueAt(clip, localU) {
  let u = localU;
  if (Number.isNaN(u) || u < 0) u = 0;
  else if (u > 1) u = clip.loop ? u - Math.floor(u) : 1;
  const out = {};
  for (const track of clip.tracks) out[track.property] = interpolateTrack(track, u);
  return out;
}

export function normalize(raw) {
  let min = Infinity;
  let max = -Infinity;
  for (const v of raw) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  const span = max - min;
  if (!(span > 0) || !Number.isFinite(span)) return raw.map(() => 0);
  return raw.map((v) => clamp01((v - min) / span));
}

function closestParam(p, a, b) {
  const abx = b[0] - a[0];
  const aby = b[1] - a[1];
  const len2 = abx * abx + aby * aby;
  if (!(len2 > 0)) return 0;
  return clamp01(((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2);
}

const dist = (p, q) => Math.hypot(p[0] - q[0], p[1] - q[1]);

export function projectOnLine(p, start, end) {
  return closestParam(p, start, end);
}

export function sketchProgress(p, poly) {
  let total = 0;
  for (let i = 1; i < poly.length; i++) total += dist(poly[i - 1], poly[i]);
  let best = Infinity;
  let bestArc = 0;
  let walked = 0;
  for (let i = 1; i < poly.length; i++) {
    const a = poly[i - 1];
    const b = poly[i];
    const len = dist(a, b);
    if (len > 0) {
      const t = closestParam(p, a, b);
      const d = dist(p, [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]);
      if (d < best) {
        best = d;
        bestArc = walked + t * len;
      }
    }
    walked += len;
  }
  return total > 0 ? clamp01(bestArc / total) : 0;
}

const MASK = (1n << 64n) - 1n;

export function randomWeight(seed, ordinal) {
  let state = (BigInt(seed) ^ BigInt(ordinal)) & MASK;
  state = (state + 0x9e3779b97f4a7c15n) & MASK;
  let z = state;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK;
  z ^= z >> 31n;
  return Number(z >> 11n) / 2 ** 53;
}

function rankScores(values) {
  const n = values.length;
  const order = values.map((_, i) => i);
  order.sort((a, b) => (values[a] < values[b] ? -1 : values[a] > values[b] ? 1 : a - b));
  const ranks = new Array(n).fill(0);
  if (n > 1) order.forEach((i, rank) => (ranks[i] = rank / (n - 1)));
  return ranks;
}

function fromRelative(viewBox, p) {
  return [viewBox.min_x + p[0] * (viewBox.max_x - viewBox.min_x), viewBox.min_y + p[1] * (viewBox.max_y - viewBox.min_y)];
}

// members: [{ midpoint: [x, y], diagonal, data: { name: text } }] in document order.
export function computeWeights(scheme, members, viewBox) {
  const sign = (direction) => (direction === "descending" ? -1 : 1);
  switch (scheme.mode) {
    case "data": {
      const key = scheme.attribute ? scheme.attribute.replace(/^data-/, "") : null;
      const values = members.map((m) => {
        if (key !== null && m.data && key in m.data) {
          const v = Number(String(m.data[key]).trim());
          if (!Number.isFinite(v) || String(m.data[key]).trim() === "") {
            throw new Error(`data-${key} is not a number: ${m.data[key]}`);
          }
          return sign(scheme.direction) * v;
        }
        return sign(scheme.direction) * m.diagonal;
      });
      return normalize(scheme.basis === "value" ? values : rankScores(values));
    }
    case "layout-radius": {
      const c = fromRelative(viewBox, scheme.center);
      return normalize(members.map((m) => dist(m.midpoint, c)));
    }
    case "layout-projection": {
      const s = fromRelative(viewBox, scheme.start);
      const e = fromRelative(viewBox, scheme.end);
      return normalize(members.map((m) => projectOnLine(m.midpoint, s, e)));
    }
    case "layout-sketch": {
      const path = scheme.polyline.map((p) => fromRelative(viewBox, p));
      return normalize(members.map((m) => sketchProgress(m.midpoint, path)));
    }
    case "layer":
      return normalize(members.map((_, i) => sign(scheme.direction) * i));
    case "random":
      return members.map((_, i) => randomWeight(scheme.seed, i));
    default:
      throw new Error(`unknown coordination mode ${scheme.mode}`);
  }
}

// Start time of every member of every track: delay + weight * offset.
export function computeTimings(program, membersByTrack, viewBox = program.viewbox_ref) {
  return program.tracks.map((track, k) => {
    const members = membersByTrack[k] || [];
    if (members.length === 0) return [];
    return computeWeights(track.coordination, members, viewBox).map((w) => track.delay + w * track.offset);
  });
}

// 2x3 matrices as [a, b, c, d, e, f].
const IDENTITY = [1, 0, 0, 1, 0, 0];

function mul(m, n) {
  return [
    m[0] * n[0] + m[2] * n[1],
    m[1] * n[0] + m[3] * n[1],
    m[0] * n[2] + m[2] * n[3],
    m[1] * n[2] + m[3] * n[3],
    m[0] * n[4] + m[2] * n[5] + m[4],
    m[1] * n[4] + m[3] * n[5] + m[5],
  ];
}

function inv(m) {
  const det = m[0] * m[3] - m[1] * m[2];
  if (!det) return IDENTITY;
  return [
    m[3] / det,
    -m[1] / det,
    -m[2] / det,
    m[0] / det,
    (m[2] * m[5] - m[3] * m[4]) / det,
    (m[1] * m[4] - m[0] * m[5]) / det,
  ];
}

const apply = (m, p) => [m[0] * p[0] + m[2] * p[1] + m[4], m[1] * p[0] + m[3] * p[1] + m[5]];
const fromSvg = (s) => (s ? [s.a, s.b, s.c, s.d, s.e, s.f] : IDENTITY);

function readViewBox(svgRoot) {
  const vb = svgRoot.viewBox && svgRoot.viewBox.baseVal;
  if (vb && vb.width > 0 && vb.height > 0) {
    return { min_x: vb.x, min_y: vb.y, max_x: vb.x + vb.width, max_y: vb.y + vb.height };
  }
  return PROGRAM.viewbox_ref;
}

function dataAttributes(el) {
  const out = {};
  for (const attr of Array.from(el.attributes)) {
    if (attr.name.startsWith("data-")) out[attr.name.slice(5)] = attr.value;
  }
  return out;
}

function describe(svgRoot, el) {
  const toRoot = mul(inv(fromSvg(svgRoot.getScreenCTM())), fromSvg(el.getScreenCTM()));
  const bb = el.getBBox();
  const corners = [
    [bb.x, bb.y],
    [bb.x + bb.width, bb.y],
    [bb.x + bb.width, bb.y + bb.height],
    [bb.x, bb.y + bb.height],
  ].map((p) => apply(toRoot, p));
  const xs = corners.map((p) => p[0]);
  const ys = corners.map((p) => p[1]);
  const box = [Math.min(...xs), Math.min(...ys), Math.max(...xs), Math.max(...ys)];
  const parent = el.parentNode && el.parentNode.getScreenCTM ? el.parentNode : svgRoot;
  const parentToRoot = mul(inv(fromSvg(svgRoot.getScreenCTM())), fromSvg(parent.getScreenCTM()));
  const midpoint = [(box[0] + box[2]) / 2, (box[1] + box[3]) / 2];
  return {
    el,
    midpoint,
    diagonal: Math.hypot(box[2] - box[0], box[3] - box[1]),
    data: dataAttributes(el),
    pivot: apply(inv(parentToRoot), midpoint),
    rest: el.transform && el.transform.baseVal.consolidate() ? fromSvg(el.transform.baseVal.consolidate().matrix) : IDENTITY,
    restText: el.getAttribute("transform"),
  };
}

function groupMembers(svgRoot, selector) {
  const cls = selector.trim().replace(/^\./, "");
  if (!cls) return [];
  const escaped = typeof CSS !== "undefined" && CSS.escape ? CSS.escape(cls) : cls;
  return Array.from(svgRoot.querySelectorAll("." + escaped)).filter((el) => !el.closest(NON_RENDERED));
}

function frameMatrix(values, member) {
  const tx = values.translateX ?? 0;
  const ty = values.translateY ?? 0;
  const rot = ((values.rotate ?? 0) * Math.PI) / 180;
  const s = values.scale ?? 1;
  const [px, py] = member.pivot;
  const cos = Math.cos(rot);
  const sin = Math.sin(rot);
  let m = [1, 0, 0, 1, tx + px, ty + py];
  m = mul(m, [cos * s, sin * s, -sin * s, cos * s, 0, 0]);
  m = mul(m, [1, 0, 0, 1, -px, -py]);
  return mul(m, member.rest);
}

function writeValues(member, values) {
  const el = member.el;
  if (TRANSFORM_PROPS.some((p) => p in values)) {
    el.setAttribute("transform", "matrix(" + frameMatrix(values, member).join(" ") + ")");
  }
  if ("opacity" in values) el.style.setProperty("opacity", String(values.opacity));
  if ("fill-color" in values) el.style.setProperty("fill", values["fill-color"]);
  if ("stroke-color" in values) el.style.setProperty("stroke", values["stroke-color"]);
  if ("stroke-width" in values) el.style.setProperty("stroke-width", String(values["stroke-width"]));
  if ("filter-blur" in values) el.style.setProperty("filter", `blur(${values["filter-blur"]}px)`);
}

const now = () => (typeof performance !== "undefined" ? performance.now() : Date.now());
const schedule = (cb) =>
  typeof requestAnimationFrame === "function" ? requestAnimationFrame(cb) : setTimeout(() => cb(now()), 16);
const unschedule = (id) => (typeof cancelAnimationFrame === "function" ? cancelAnimationFrame(id) : clearTimeout(id));

// Builds a playback handle for `svgRoot`. Groups with no members are kept
// as empty tracks.
export function createAnimation(svgRoot, options = {}) {
  const program = options.program || PROGRAM;
  const recompute = options.recompute || "init";
  let plan = [];
  let end = 0;

  function build() {
    const viewBox = readViewBox(svgRoot);
    plan = program.tracks.map((track) => {
      const members = groupMembers(svgRoot, track.clip.selector).map((el) => describe(svgRoot, el));
      const weights = members.length ? computeWeights(track.coordination, members, viewBox) : [];
      return { track, members, starts: weights.map((w) => track.delay + w * track.offset) };
    });
    end = 0;
    for (const p of plan) {
      for (const s of p.starts) end = Math.max(end, s + p.track.duration);
    }
  }

  function render(t) {
    const frame = new Map();
    for (const p of plan) {
      p.members.forEach((member, i) => {
        const values = clipValueAt(p.track.clip, (t - p.starts[i]) / p.track.duration);
        const entry = frame.get(member) || {};
        frame.set(member, Object.assign(entry, values));
      });
    }
    frame.forEach((values, member) => writeValues(member, values));
  }

  const looping = program.tracks.some((t) => t.clip.loop);
  let playing = false;
  let elapsed = 0;
  let startedAt = 0;
  let pending = null;

  function tick(ts) {
    if (!playing) return;
    const t = elapsed + (ts - startedAt);
    render(t);
    if (looping || t < end) pending = schedule(tick);
    else playing = false;
  }

  build();
  render(0);

  return {
    play() {
      if (playing) return;
      playing = true;
      startedAt = now();
      pending = schedule(tick);
    },
    pause() {
      if (!playing) return;
      playing = false;
      elapsed += now() - startedAt;
      if (pending !== null) unschedule(pending);
      pending = null;
    },
    replay() {
      this.pause();
      elapsed = 0;
      if (recompute === "replay") build();
      render(0);
      this.play();
    },
  };
}
