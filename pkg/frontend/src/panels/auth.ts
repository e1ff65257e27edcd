/** Login screen, session menu, and the admin user-management screen. */

import { Api, ApiError } from "../api.js";
import { clear, h, panel } from "../dom.js";
import { User } from "../types.js";

export class LoginScreen {
  el: HTMLElement;
  onLogin: ((user: User) => void) | null = null;

  constructor(private api: Api) {
    const username = h("input", { placeholder: "username", autocomplete: "username" });
    const password = h("input", { placeholder: "password", type: "password" });
    const error = h("p", { class: "field-error" });
    this.el = h("div", { class: "login-screen" },
      h("form", {
        class: "login-box",
        onsubmit: async (e: Event) => {
          e.preventDefault();
          try {
            const user = await this.api.login(username.value, password.value);
            error.textContent = "";
            this.onLogin?.(user);
          } catch (err) {
            error.textContent = err instanceof ApiError && err.status === 401
              ? "invalid username or password" : String(err);
          }
        },
      },
        h("h1", {}, "mrseq"),
        username, password,
        h("button", { type: "submit" }, "Log in"),
        error,
      ),
    );
  }
}

export class UserMenu {
  el: HTMLElement;
  onLogout: (() => void) | null = null;
  onShowAdmin: (() => void) | null = null;

  constructor(private api: Api) {
    this.el = h("div", { class: "user-menu" });
    this.render();
  }

  render(): void {
    clear(this.el);
    const user = this.api.user;
    if (!user) return;
    this.el.append(h("span", { class: "user-name" }, `${user.username} (${user.role})`));
    if (user.role === "admin") {
      this.el.append(h("button", { onclick: () => this.onShowAdmin?.() }, "Admin"));
    }
    this.el.append(h("button", {
      onclick: async () => {
        await this.api.logout();
        this.onLogout?.();
      },
    }, "Log out"));
  }
}

export class AdminPanel {
  el: HTMLElement;
  private body: HTMLElement;

  constructor(private api: Api) {
    this.body = h("div", { dataset: { testid: "admin-users" } });
    this.el = panel("User management",
      h("button", { onclick: () => void this.refresh() }, "Refresh"), this.body);
  }

  async refresh(): Promise<void> {
    const users = await this.api.users();
    clear(this.body);
    for (const u of users) {
      this.body.append(h("div", { class: "user-row", dataset: { id: u.id } },
        h("span", {}, `${u.username} [${u.role}]`),
        h("button", {
          onclick: async () => {
            const pw = prompt(`new password for ${u.username}`);
            if (pw) await this.api.updateUser(u.id, { password: pw });
          },
        }, "reset password"),
        h("button", {
          onclick: async () => {
            await this.api.deleteUser(u.id);
            await this.refresh();
          },
        }, "delete"),
      ));
    }
    const name = h("input", { placeholder: "username" });
    const pw = h("input", { placeholder: "password" });
    const role = h("select", {},
      h("option", { value: "user" }, "user"), h("option", { value: "admin" }, "admin"));
    const error = h("span", { class: "field-error" });
    this.body.append(h("div", { class: "user-add" },
      name, pw, role,
      h("button", {
        onclick: async () => {
          try {
            await this.api.createUser(name.value, pw.value, role.value);
            await this.refresh();
          } catch (e) {
            error.textContent = String((e as Error).message);
          }
        },
      }, "create user"),
      error,
    ));
  }
}
