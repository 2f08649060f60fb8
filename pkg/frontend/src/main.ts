/**
 * Entry point: wires the service client, view model and renderer together.
 * The console is a single session view; every action repaints.
 */

import { AuditApi } from "./api.js";
import { render, type UiHandlers } from "./ui.js";
import { ConsoleViewModel } from "./viewmodel.js";

export interface ConsoleHandle {
  vm: ConsoleViewModel;
  repaint: () => void;
}

export function mountConsole(root: HTMLElement, api: AuditApi): ConsoleHandle {
  const vm = new ConsoleViewModel(api);
  const paint = () => render(vm, root, handlers);

  const handlers: UiHandlers = {
    onOpen: (form) => {
      void vm.open({ ...form }).then(paint);
    },
    onDraw: (count) => {
      void vm.drawNext(count).then(paint);
    },
    onEntry: (ordinal, candidate) => {
      const votes: Record<string, string> = {};
      if (candidate !== null && vm.snapshot) {
        votes[vm.snapshot.contest] = candidate;
      }
      void vm.submitEntry(ordinal, votes).then(paint);
    },
    onRefresh: () => {
      void vm.refresh().then(paint);
    },
    onDownload: () => {
      void vm.downloadTranscript().then((text) => {
        const blob = new Blob([text], { type: "application/jsonl" });
        const link = document.createElement("a");
        link.href = URL.createObjectURL(blob);
        link.download = "transcript.jsonl";
        link.click();
        URL.revokeObjectURL(link.href);
      });
    },
    onDismissConflict: () => {
      vm.dismissConflict();
      paint();
    },
  };

  paint();
  return { vm, repaint: paint };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mountConsole(document.getElementById("app")!, new AuditApi(""));
}
