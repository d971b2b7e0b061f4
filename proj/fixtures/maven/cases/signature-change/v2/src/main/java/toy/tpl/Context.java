package toy.tpl;

public class Context {
    public static Context defaults() {
        return null;
    }

    public static Context sandboxed() {
        return null;
    }
}
