/**
 * Browser entry point: one websocket, one state fold, one render pass
 * per message batch. All game logic lives in the pure modules; this
 * file only wires them to the DOM.
 */

import { renderChart } from "./charts";
import type { RegionMode } from "./charts";
import { connect, sessionUrl } from "./client";
import type { BridgeClient, ConnectionStatus } from "./client";
import { controlSurface } from "./gating";
import type { FlowsDocument } from "./csv";
import { flowsToTraces, parseFlowsText, serializeFlows } from "./csv";
import {
  draftToElement,
  groupByLocation,
  newDraft,
  templateDetails,
  templateMenu,
  validateDraft,
} from "./planEditor";
import type { Draft } from "./planEditor";
import type { ElementDoc, Role, ServerMessage } from "./protocol";
import { templateRole } from "./protocol";
import { renderSchematic } from "./schematic";
import { initialState, planElements, reduce } from "./state";
import type { SessionState } from "./state";
import { buildObjectivePanel, buildPanels } from "./panels";

interface App {
  state: SessionState;
  client: BridgeClient | null;
  status: ConnectionStatus;
  mode: RegionMode;
  draft: Draft | null;
  draftErrors: Map<string, string>;
  editingId: string | null;
  flows: FlowsDocument[];
  flowErrors: string[];
  renderQueued: boolean;
}

function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const el = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") el.className = v;
    else el.setAttribute(k, v);
  }
  el.append(...children);
  return el;
}

function queryParams(): { server: string; session: string; role: Role } {
  const q = new URLSearchParams(location.search);
  const roleText = q.get("role") ?? "observer";
  const role: Role = (
    ["agriculture", "water", "energy", "observer"] as Role[]
  ).includes(roleText as Role)
    ? (roleText as Role)
    : "observer";
  return {
    server: q.get("server") ?? `ws://${location.hostname || "localhost"}:7441`,
    session: q.get("session") ?? "demo",
    role,
  };
}

function start(root: HTMLElement): void {
  const params = queryParams();
  const app: App = {
    state: initialState(params.role),
    client: null,
    status: "connecting",
    mode: "national",
    draft: null,
    draftErrors: new Map(),
    editingId: null,
    flows: [],
    flowErrors: [],
    renderQueued: false,
  };

  const header = h("header", { class: "bar" });
  const statusDot = h("span", { class: "dot" });
  const titleEl = h("strong", {}, "infrastructure planning session");
  const roleBadge = h("span", { class: "badge" }, params.role);
  const statusLine = h("span", { class: "muted" });
  header.append(statusDot, titleEl, roleBadge, statusLine);

  const controls = h("section", { class: "card controls" });
  const editor = h("section", { class: "card editor" });
  const objectives = h("section", { class: "card objectives" });
  const schematicBox = h("section", { class: "card schematic-box" });
  const chartsBox = h("section", { class: "charts" });
  const dialog = document.createElement("dialog");
  dialog.className = "element-dialog";

  const left = h("div", { class: "col left" }, schematicBox, editor);
  const right = h("div", { class: "col right" }, controls, objectives, chartsBox);
  root.append(header, h("div", { class: "layout" }, left, right), dialog);

  function scheduleRender(): void {
    if (app.renderQueued) return;
    app.renderQueued = true;
    requestAnimationFrame(() => {
      app.renderQueued = false;
      render();
    });
  }

  function onMessage(msg: ServerMessage): void {
    app.state = reduce(app.state, msg);
    scheduleRender();
  }

  app.client = connect(sessionUrl(params.server, params.session, params.role), {
    onMessage,
    onStatus: (status) => {
      app.status = status;
      scheduleRender();
    },
    onReset: () => {
      app.state = initialState(params.role);
      scheduleRender();
    },
  });

  function send(msg: Parameters<BridgeClient["send"]>[0]): void {
    app.client?.send(msg);
  }

  function openDraft(draft: Draft, editingId: string | null): void {
    app.draft = draft;
    app.editingId = editingId;
    app.draftErrors = new Map();
    renderDialog();
    dialog.showModal();
  }

  function commitDraft(): void {
    const scenario = app.state.joined?.scenario;
    if (!app.draft || !scenario) return;
    const errors = validateDraft(app.draft, scenario, app.state.role);
    if (errors.length) {
      app.draftErrors = new Map(errors.map((e) => [e.field, e.message]));
      renderDialog();
      return;
    }
    const element = draftToElement(app.draft);
    send({
      kind: app.editingId ? "element_edited" : "element_added",
      element,
    });
    dialog.close();
    app.draft = null;
  }

  function renderDialog(): void {
    dialog.replaceChildren();
    const scenario = app.state.joined?.scenario;
    const draft = app.draft;
    if (!scenario || !draft) return;
    const menu = templateMenu(scenario, app.state.role);
    const template =
      scenario.templates.find((t) => t.id === draft.template) ?? menu[0];
    const form = h("form", { method: "dialog", class: "element-form" });

    const fieldRow = (
      label: string,
      input: HTMLElement,
      error?: string,
    ): HTMLElement => {
      const row = h("label", { class: "field" }, h("span", {}, label), input);
      if (error) row.append(h("em", { class: "error" }, error));
      return row;
    };

    const idInput = h("input", { value: draft.id });
    idInput.oninput = () => {
      draft.id = idInput.value;
    };

    const tmplSelect = h("select", {});
    for (const t of menu) {
      const opt = h("option", { value: t.id }, t.id);
      if (t.id === draft.template) opt.selected = true;
      tmplSelect.append(opt);
    }
    tmplSelect.onchange = () => {
      draft.template = tmplSelect.value;
      renderDialog();
    };

    const nodeSelect = (value: string, set: (v: string) => void) => {
      const sel = h("select", {});
      for (const n of scenario.nodes) {
        const opt = h("option", { value: n.id }, n.id);
        if (n.id === value) opt.selected = true;
        sel.append(opt);
      }
      sel.onchange = () => set(sel.value);
      return sel;
    };

    const yearInput = h("input", {
      type: "number",
      value: String(draft.commissionStart),
    });
    yearInput.oninput = () => {
      draft.commissionStart = Number(yearInput.value);
    };

    form.append(
      h("h3", {}, app.editingId ? `edit ${app.editingId}` : "add element"),
      fieldRow("name", idInput, app.draftErrors.get("id")),
      fieldRow("template", tmplSelect, app.draftErrors.get("template")),
      fieldRow(
        "origin",
        nodeSelect(draft.origin, (v) => {
          draft.origin = v;
        }),
        app.draftErrors.get("origin"),
      ),
      fieldRow(
        "destination",
        nodeSelect(draft.destination, (v) => {
          draft.destination = v;
        }),
        app.draftErrors.get("destination"),
      ),
      fieldRow(
        "commission year",
        yearInput,
        app.draftErrors.get("commissionStart"),
      ),
    );

    if (template) {
      const details = templateDetails(template);
      const table = h("table", { class: "details" });
      const pushRow = (name: string, value: string) =>
        table.append(h("tr", {}, h("td", {}, name), h("td", {}, value)));
      pushRow("capital cost", `${details.capitalMillions} M$ over ${details.capitalYears} y`);
      pushRow("fixed cost", `${details.fixedMillions} M$/y`);
      pushRow("lifespan", `${details.lifespanYears} y`);
      for (const p of details.production) pushRow(p.name, String(p.value));
      form.append(table);
    }

    const save = h("button", { type: "button", class: "primary" }, "save");
    save.onclick = commitDraft;
    const cancel = h("button", { type: "button" }, "cancel");
    cancel.onclick = () => {
      dialog.close();
      app.draft = null;
    };
    form.append(h("div", { class: "actions" }, save, cancel));
    dialog.append(form);
  }

  function renderEditor(): void {
    editor.replaceChildren(h("h2", {}, "infrastructure plan"));
    const scenario = app.state.joined?.scenario;
    if (!scenario) {
      editor.append(h("p", { class: "muted" }, "waiting for scenario"));
      return;
    }
    const role = app.state.role;
    const playing = role !== "observer";
    const surface = controlSurface(app.state);
    const editable = playing && !surface.running;
    const menu = templateMenu(scenario, role);
    if (editable && menu.length) {
      const addRow = h("div", { class: "add-row" });
      const tmplSelect = h("select", {});
      for (const t of menu) tmplSelect.append(h("option", { value: t.id }, t.id));
      const siteSelect = h("select", {});
      for (const n of scenario.nodes)
        siteSelect.append(h("option", { value: n.id }, n.id));
      const addBtn = h("button", { type: "button" }, "add element");
      addBtn.onclick = () => {
        const template = scenario.templates.find(
          (t) => t.id === tmplSelect.value,
        );
        if (template) {
          openDraft(newDraft(scenario, template, siteSelect.value), null);
        }
      };
      addRow.append(tmplSelect, siteSelect, addBtn);
      editor.append(addRow);
    }
    const mine = (e: ElementDoc): boolean => {
      const t = scenario.templates.find((x) => x.id === e.template);
      return !!t && templateRole(t.sector) === role;
    };
    for (const group of groupByLocation(planElements(app.state))) {
      const list = h("ul", { class: "elements" });
      for (const element of group.elements) {
        const li = h(
          "li",
          {},
          h("code", {}, element.id),
          h(
            "span",
            { class: "muted" },
            ` ${element.template}, ${element.origin}` +
              (element.destination !== element.origin
                ? ` to ${element.destination}`
                : "") +
              `, from ${element.commissionStart}`,
          ),
        );
        if (editable && mine(element)) {
          const edit = h("button", { type: "button", class: "mini" }, "edit");
          edit.onclick = () =>
            openDraft(
              {
                id: element.id,
                template: element.template,
                origin: element.origin,
                destination: element.destination,
                commissionStart: element.commissionStart,
              },
              element.id,
            );
          const del = h("button", { type: "button", class: "mini" }, "remove");
          del.onclick = () => send({ kind: "element_removed", elementId: element.id });
          li.append(" ", edit, " ", del);
        }
        list.append(li);
      }
      editor.append(h("h3", {}, group.location), list);
    }
    const lastError = app.state.errors[app.state.errors.length - 1];
    if (lastError) {
      editor.append(
        h("p", { class: "error" }, `${lastError.code}: ${lastError.message}`),
      );
    }
  }

  function renderControls(): void {
    controls.replaceChildren(h("h2", {}, "simulation"));
    const surface = controlSurface(app.state);
    controls.append(h("p", { class: "status" }, surface.statusLine));
    if (surface.mode === "decoupled") {
      renderDecoupled();
      return;
    }
    if (app.state.role === "observer") return;
    const init = h("button", { type: "button" }, "Initialize");
    init.disabled = !surface.canInitialize;
    init.onclick = () => send({ kind: "init" });
    const exec = h("button", { type: "button", class: "primary" }, "Execute");
    exec.disabled = !surface.canExecute;
    exec.onclick = () => send({ kind: "execute" });
    controls.append(h("div", { class: "actions" }, init, exec));
    if (surface.running) {
      const bar = h("div", { class: "progress" });
      bar.append(h("div", { class: "progress-pip" }));
      controls.append(bar);
    }
  }

  function renderDecoupled(): void {
    const role = app.state.role;
    controls.append(
      h(
        "p",
        { class: "muted" },
        "run your sector locally, export your flows, and import the " +
          "files the other sectors hand back:",
      ),
      h(
        "pre",
        {},
        `sipg run-mono --variant 2 --role ${role} \\\n` +
          `  --scenario scenario.json --plan plan.json --out-dir exchange/`,
      ),
      h(
        "p",
        { class: "muted" },
        `your flows land in exchange/exchange-${role}.csv; drop the ` +
          "other sectors' files in the same directory and rerun to refresh.",
      ),
    );
    const picker = h("input", { type: "file", multiple: "" });
    picker.onchange = async () => {
      app.flowErrors = [];
      for (const file of picker.files ?? []) {
        try {
          const doc = parseFlowsText(await file.text());
          app.flows = [...app.flows.filter((d) => d.role !== doc.role), doc];
        } catch (err) {
          app.flowErrors.push(`${file.name}: ${(err as Error).message}`);
        }
      }
      scheduleRender();
    };
    controls.append(h("label", { class: "field" }, "import flow files ", picker));
    for (const message of app.flowErrors) {
      controls.append(h("p", { class: "error" }, message));
    }
    for (const doc of app.flows) {
      const row = h("div", { class: "flow-doc" }, h("code", {}, `${doc.role} flows`));
      const save = h("button", { type: "button", class: "mini" }, "export");
      save.onclick = () => {
        const blob = new Blob([serializeFlows(doc)], { type: "text/csv" });
        const a = h("a", {
          href: URL.createObjectURL(blob),
          download: `exchange-${doc.role}.csv`,
        });
        a.click();
        URL.revokeObjectURL(a.href);
      };
      row.append(" ", save);
      controls.append(row);
    }
  }

  function renderObjectives(): void {
    objectives.replaceChildren(h("h2", {}, "objectives"));
    const panel = buildObjectivePanel(app.state);
    if (panel.kind === "none") {
      objectives.append(h("p", { class: "muted" }, "no completed execution yet"));
      return;
    }
    const table = h("table", { class: "details" });
    for (const row of panel.rows) {
      table.append(h("tr", {}, h("td", {}, row.label), h("td", {}, row.value)));
    }
    if (panel.joint !== null) {
      table.append(
        h("tr", { class: "joint" }, h("td", {}, "joint objective"), h("td", {}, panel.joint)),
      );
    }
    objectives.append(table);
    if (panel.violations.length) {
      objectives.append(
        h(
          "p",
          { class: "error" },
          `budget exceeded in ${panel.violations.join(", ")}`,
        ),
      );
    }
    if (panel.series.some((s) => s.points.length > 1)) {
      objectives.append(renderChart("scores by year", "", panel.series));
    }
  }

  function renderCharts(): void {
    chartsBox.replaceChildren();
    const toggle = h("div", { class: "toggle" });
    for (const mode of ["national", "regional"] as RegionMode[]) {
      const btn = h(
        "button",
        { type: "button", class: mode === app.mode ? "mini on" : "mini" },
        mode,
      );
      btn.onclick = () => {
        app.mode = mode;
        scheduleRender();
      };
      toggle.append(btn);
    }
    chartsBox.append(toggle);
    if (app.state.joined?.variant === "2") {
      for (const doc of app.flows) {
        for (const trace of flowsToTraces(doc)) {
          if (trace.attribute.includes("Out")) {
            chartsBox.append(
              renderChart(
                `${trace.attribute} at ${trace.objectName}`,
                trace.units,
                [{ label: trace.objectName, points: trace.points }],
              ),
            );
          }
        }
      }
      return;
    }
    for (const panel of buildPanels(app.state, app.mode)) {
      const series = panel.reference
        ? [
            ...panel.series,
            {
              label: panel.reference.label,
              points: panel.series[0]
                ? panel.series[0].points.map(
                    ([y]) => [y, panel.reference?.value ?? 0] as [number, number],
                  )
                : [],
            },
          ]
        : panel.series;
      chartsBox.append(renderChart(panel.title, panel.units, series));
    }
  }

  function render(): void {
    statusDot.className = `dot ${app.status}`;
    const joined = app.state.joined;
    roleBadge.textContent = joined ? `${joined.role} @ ${joined.sessionId}` : params.role;
    statusLine.textContent = joined
      ? `variant ${joined.variant}, ${joined.iterationsPerYear} iterations/year`
      : app.status;
    schematicBox.replaceChildren(renderSchematic(planElements(app.state)));
    renderControls();
    renderEditor();
    renderObjectives();
    renderCharts();
  }

  render();
}

const rootEl = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootEl) start(rootEl);
