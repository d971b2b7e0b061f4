package toy.xml;

public class Parser {
    public static String parse(String xml) {
        // @emit [toy] external entity resolved
        // @vulnerable
        return xml;
    }

    public static String text(String xml) {
        return xml;
    }
}
