/**
 * Static three-region schematic: coast, cities, interior, with the
 * corridors between them. Element counts per region are overlaid so
 * the plan's footprint is visible at a glance.
 */

import type { ElementDoc } from "./protocol";

const SVG_NS = "http://www.w3.org/2000/svg";

interface Site {
  x: number;
  y: number;
  label: string;
}

const SITES: Record<string, Site> = {
  industrial: { x: 70, y: 150, label: "industrial (coast)" },
  urban: { x: 210, y: 60, label: "urban" },
  rural: { x: 350, y: 150, label: "rural (interior)" },
};

function el(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

export function renderSchematic(elements: readonly ElementDoc[]): SVGElement {
  const svg = el("svg", { viewBox: "0 0 420 210", class: "schematic" });
  svg.appendChild(
    el("rect", {
      x: "6",
      y: "20",
      width: "30",
      height: "180",
      class: "schematic-sea",
    }),
  );
  const pairs: [string, string][] = [
    ["industrial", "urban"],
    ["urban", "rural"],
    ["industrial", "rural"],
  ];
  for (const [a, b] of pairs) {
    const pa = SITES[a];
    const pb = SITES[b];
    if (!pa || !pb) continue;
    svg.appendChild(
      el("line", {
        x1: String(pa.x),
        y1: String(pa.y),
        x2: String(pb.x),
        y2: String(pb.y),
        class: "schematic-corridor",
      }),
    );
  }
  const counts = new Map<string, number>();
  for (const e of elements) {
    counts.set(e.origin, (counts.get(e.origin) ?? 0) + 1);
  }
  for (const [id, site] of Object.entries(SITES)) {
    svg.appendChild(
      el("circle", {
        cx: String(site.x),
        cy: String(site.y),
        r: "22",
        class: "schematic-region",
      }),
    );
    const name = el("text", {
      x: String(site.x),
      y: String(site.y - 30),
      "text-anchor": "middle",
      class: "schematic-label",
    });
    name.textContent = site.label;
    svg.appendChild(name);
    const count = el("text", {
      x: String(site.x),
      y: String(site.y + 5),
      "text-anchor": "middle",
      class: "schematic-count",
    });
    count.textContent = String(counts.get(id) ?? 0);
    svg.appendChild(count);
  }
  return svg;
}
